#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "microharvest/grid.hpp"
#include "microharvest/rng.hpp"
#include "microharvest/scene.hpp"

namespace mh {

// The seven per-region shape descriptors, in pixel units of the training
// resolution: area (px^2), moment-ellipse major/minor axis lengths (px),
// solidity, thickness (px), fiber length (px), skeleton branch count.
struct ShapeVector {
    double area = 0.0;
    double major_axis = 0.0;
    double minor_axis = 0.0;
    double solidity = 0.0;
    double thickness = 0.0;
    double fiber_length = 0.0;
    double n_branches = 0.0;

    static constexpr int kDim = 7;
    Eigen::VectorXd to_vector() const;
    static ShapeVector from_vector(const Eigen::VectorXd& v);
};

// Descriptors of a single 8-connected region given as a 0/1 mask.
ShapeVector extract_shape_descriptors(const GridU8& mask);

struct Mvn {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int dim() const { return static_cast<int>(mean.size()); }
    Eigen::VectorXd sample(Rng& rng) const;
    double log_pdf(const Eigen::VectorXd& x) const;

    // Symmetrizes cov, clamps negative eigenvalues, caches the sampling factor.
    void finalize();

private:
    Eigen::MatrixXd factor_;       // cov = factor * factor^T
    Eigen::MatrixXd cov_inv_;
    double log_norm_ = 0.0;
    bool ready_ = false;
    friend struct Gmm;
};

Mvn fit_mvn(const std::vector<Eigen::VectorXd>& samples);

struct Gmm {
    std::vector<double> weights;
    std::vector<Mvn> components;

    int k() const { return static_cast<int>(components.size()); }
    double log_pdf(const Eigen::VectorXd& x) const;
    Eigen::VectorXd responsibilities(const Eigen::VectorXd& x) const;
};

struct GmmFitOptions {
    int max_iterations = 500;
    double tol = 1e-6;             // relative log-likelihood change
    bool free_weights = false;     // default: weights held fixed at 1/K
    uint64_t seed = 777;           // k-means++ initialization stream
    double reg_scale = 1e-6;       // lambda = reg_scale * trace(cov)/d, on demand
};

struct GmmFitResult {
    Gmm model;
    std::vector<double> log_likelihood;   // one entry per iteration
    int iterations = 0;
    bool converged = false;
};

GmmFitResult fit_gmm(const std::vector<Eigen::VectorXd>& samples, int k,
                     const GmmFitOptions& opts = {});

// Cubic concentration -> expected label count curve; evaluation clamps the
// argument to [lo, hi] and the value at zero.
struct CountCurve {
    std::array<double, 4> coeffs{0, 0, 0, 0};  // c3, c2, c1, c0
    double lo = 1.0;
    double hi = 400.0;
    double eval(double concentration) const;
};

CountCurve fit_count_curve(const std::vector<std::pair<double, double>>& points);

struct GenerativeModel {
    Mvn cell_model;                       // over R^7
    Gmm debris_model;                     // K components over R^7
    std::map<int, Mvn> dist_models;       // concentration -> per-class count MVN (R^{1+K})
    CountCurve count_curve;
    double train_image_area_um2 = 3300.0 * 3300.0;

    int debris_classes() const { return debris_model.k(); }
    // Distribution model with the nearest trained concentration.
    const Mvn& nearest_dist_model(double concentration) const;
};

// Draws a shape for the given label class and clamps it to a valid ShapeVector.
ShapeVector sample_shape(const GenerativeModel& model, uint8_t label_class, Rng& rng);

void save_model(const GenerativeModel& model, const std::string& path);
GenerativeModel load_model(const std::string& path);
GenerativeModel default_model();          // compiled-in copy of data/default_model.txt

}  // namespace mh
