#include "microharvest/shapemodel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "microharvest/imgops.hpp"

namespace mh {

// --- ShapeVector ---------------------------------------------------------------

Eigen::VectorXd ShapeVector::to_vector() const {
    Eigen::VectorXd v(kDim);
    v << area, major_axis, minor_axis, solidity, thickness, fiber_length, n_branches;
    return v;
}

ShapeVector ShapeVector::from_vector(const Eigen::VectorXd& v) {
    ShapeVector s;
    s.area = v(0);
    s.major_axis = v(1);
    s.minor_axis = v(2);
    s.solidity = v(3);
    s.thickness = v(4);
    s.fiber_length = v(5);
    s.n_branches = v(6);
    return s;
}

ShapeVector extract_shape_descriptors(const GridU8& mask) {
    // pad by one background pixel so skeleton/EDT see a border
    const int w0 = mask.width(), h0 = mask.height();
    GridU8 m(w0 + 2, h0 + 2, 0);
    int area = 0;
    for (int y = 0; y < h0; ++y)
        for (int x = 0; x < w0; ++x)
            if (mask.at(x, y)) {
                m.at(x + 1, y + 1) = 1;
                ++area;
            }
    if (area == 0) throw std::runtime_error("empty mask");
    GridI32 ids;
    if (connected_components(m, ids, 8) != 1)
        throw std::runtime_error("not a single component");

    ShapeVector s;
    s.area = area;

    // moment ellipse; pixels contribute as unit squares (adds 1/12 per axis)
    double sx = 0, sy = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                sx += x + 0.5;
                sy += y + 0.5;
            }
    const double cx = sx / area, cy = sy / area;
    double mxx = 0, myy = 0, mxy = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                mxx += dx * dx;
                myy += dy * dy;
                mxy += dx * dy;
            }
    mxx = mxx / area + 1.0 / 12.0;
    myy = myy / area + 1.0 / 12.0;
    mxy /= area;
    const double common = std::sqrt(0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy);
    const double l1 = 0.5 * (mxx + myy) + common;
    const double l2 = 0.5 * (mxx + myy) - common;
    s.major_axis = 4.0 * std::sqrt(std::max(l1, 0.0));
    s.minor_axis = 4.0 * std::sqrt(std::max(l2, 0.0));

    s.solidity = static_cast<double>(area) / std::max(1, convex_area_pixels(m));

    const SkeletonInfo sk = analyze_skeleton(m, 2.0);
    s.n_branches = static_cast<double>(sk.branches.size());
    s.fiber_length = 0.0;
    for (double l : sk.branch_lengths) s.fiber_length = std::max(s.fiber_length, l);

    // thickness: twice the mean boundary distance along the skeleton
    GridU8 bg(m.width(), m.height(), 0);
    for (size_t i = 0; i < m.size(); ++i) bg[i] = m[i] ? 0 : 1;
    const GridF dsq = distance_sq_transform(bg);
    double tsum = 0.0;
    int tn = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (sk.skeleton.at(x, y)) {
                tsum += std::sqrt(static_cast<double>(dsq.at(x, y))) - 0.5;
                ++tn;
            }
    s.thickness = tn ? 2.0 * tsum / tn : 1.0;
    return s;
}

// --- Mvn -----------------------------------------------------------------------

void Mvn::finalize() {
    const int d = dim();
    cov = ((cov + cov.transpose()) * 0.5).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues();
    bool clipped = false;
    for (int i = 0; i < d; ++i)
        if (ev(i) < 0.0) {
            if (ev(i) < -1e-9) clipped = true;
            ev(i) = 0.0;
        }
    (void)clipped;
    cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    factor_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();

    // pseudo-inverse pieces for log_pdf; singular directions get a floor
    Eigen::VectorXd ev_safe = ev;
    double floor = 1e-12 * std::max(1.0, ev.maxCoeff());
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) {
        if (ev_safe(i) < floor) ev_safe(i) = floor;
        log_det += std::log(ev_safe(i));
    }
    cov_inv_ = es.eigenvectors() * ev_safe.cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
    log_norm_ = -0.5 * (d * std::log(2.0 * M_PI) + log_det);
    ready_ = true;
}

Eigen::VectorXd Mvn::sample(Rng& rng) const {
    if (!ready_) throw std::runtime_error("Mvn not finalized");
    Eigen::VectorXd z(dim());
    for (int i = 0; i < dim(); ++i) z(i) = rng.normal();
    return mean + factor_ * z;
}

double Mvn::log_pdf(const Eigen::VectorXd& x) const {
    if (!ready_) throw std::runtime_error("Mvn not finalized");
    const Eigen::VectorXd d = x - mean;
    return log_norm_ - 0.5 * d.dot(cov_inv_ * d);
}

Mvn fit_mvn(const std::vector<Eigen::VectorXd>& samples) {
    if (samples.size() < 2) throw std::runtime_error("need at least 2 samples");
    const int d = static_cast<int>(samples[0].size());
    for (const auto& s : samples)
        if (s.size() != d) throw std::runtime_error("sample dimension mismatch");
    const double n = static_cast<double>(samples.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : samples) mean += s;
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples) {
        const Eigen::VectorXd c = s - mean;
        cov += c * c.transpose();
    }
    cov /= n;  // MLE normalization
    Mvn m;
    m.mean = mean;
    m.cov = cov;
    m.finalize();
    return m;
}

// --- Gmm -----------------------------------------------------------------------

double Gmm::log_pdf(const Eigen::VectorXd& x) const {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(components.size());
    for (size_t i = 0; i < components.size(); ++i) {
        terms[i] = std::log(weights[i]) + components[i].log_pdf(x);
        max_term = std::max(max_term, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

Eigen::VectorXd Gmm::responsibilities(const Eigen::VectorXd& x) const {
    const int K = k();
    Eigen::VectorXd r(K);
    double max_term = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
        r(i) = std::log(weights[i]) + components[i].log_pdf(x);
        max_term = std::max(max_term, r(i));
    }
    double acc = 0.0;
    for (int i = 0; i < K; ++i) {
        r(i) = std::exp(r(i) - max_term);
        acc += r(i);
    }
    return r / acc;
}

namespace {

// k-means++ seeding over the sample set.
std::vector<int> kmeanspp_centers(const std::vector<Eigen::VectorXd>& xs, int k, Rng& rng) {
    const int n = static_cast<int>(xs.size());
    std::vector<int> centers;
    centers.push_back(rng.uniform_int(n));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = (xs[i] - xs[centers.back()]).squaredNorm();
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        int pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (int i = 0; i < n; ++i) {
                u -= d2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(n);
        }
        centers.push_back(pick);
    }
    return centers;
}

// Adds the smallest escalating ridge that makes the covariance usable.
void regularize(Mvn& comp, double reg_scale) {
    const int d = comp.dim();
    const double tr = std::max(comp.cov.trace(), 1e-300);
    double lambda = reg_scale * tr / d;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(comp.cov);
        if (llt.info() == Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comp.cov);
            if (es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
                return;
        }
        comp.cov += lambda * Eigen::MatrixXd::Identity(d, d);
        lambda *= 10.0;
    }
    throw std::runtime_error("degenerate component");
}

}  // namespace

GmmFitResult fit_gmm(const std::vector<Eigen::VectorXd>& samples, int k,
                     const GmmFitOptions& opts) {
    if (k < 1) throw std::runtime_error("k must be >= 1");
    const int n = static_cast<int>(samples.size());
    if (n == 0) throw std::runtime_error("no samples");
    const int d = static_cast<int>(samples[0].size());
    if (n < k * (d + 1)) throw std::runtime_error("too few samples");
    for (const auto& s : samples)
        if (s.size() != d) throw std::runtime_error("sample dimension mismatch");

    Rng rng(opts.seed);
    GmmFitResult res;
    Gmm& g = res.model;
    g.weights.assign(k, 1.0 / k);
    g.components.resize(k);

    // init: k-means++ centers, hard assignment, per-cluster moments
    const auto centers = kmeanspp_centers(samples, k, rng);
    std::vector<int> assign(n, 0);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double dd = (samples[i] - samples[centers[c]]).squaredNorm();
            if (dd < best) {
                best = dd;
                assign[i] = c;
            }
        }
    }
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        int cnt = 0;
        for (int i = 0; i < n; ++i)
            if (assign[i] == c) {
                mean += samples[i];
                ++cnt;
            }
        if (cnt == 0) {
            mean = samples[centers[c]];
            cnt = 1;
        } else {
            mean /= cnt;
        }
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < n; ++i)
            if (assign[i] == c) {
                const Eigen::VectorXd dd = samples[i] - mean;
                cov += dd * dd.transpose();
            }
        cov /= std::max(1, cnt);
        g.components[c].mean = mean;
        g.components[c].cov = cov;
        regularize(g.components[c], opts.reg_scale);
        g.components[c].finalize();
    }

    Eigen::MatrixXd resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // E-step
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd lp(k);
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                lp(c) = std::log(g.weights[c]) + g.components[c].log_pdf(samples[i]);
                mx = std::max(mx, lp(c));
            }
            double acc = 0.0;
            for (int c = 0; c < k; ++c) acc += std::exp(lp(c) - mx);
            const double lse = mx + std::log(acc);
            ll += lse;
            for (int c = 0; c < k; ++c) resp(i, c) = std::exp(lp(c) - lse);
        }
        res.log_likelihood.push_back(ll);
        res.iterations = iter + 1;
        if (iter > 0) {
            const double rel = std::abs(ll - prev_ll) / std::max(1.0, std::abs(prev_ll));
            if (rel < opts.tol) {
                res.converged = true;
                break;
            }
        }
        prev_ll = ll;

        // M-step
        for (int c = 0; c < k; ++c) {
            const double nk = resp.col(c).sum();
            if (nk <= 1e-12) throw std::runtime_error("degenerate component");
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (int i = 0; i < n; ++i) mean += resp(i, c) * samples[i];
            mean /= nk;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd dd = samples[i] - mean;
                cov += resp(i, c) * (dd * dd.transpose());
            }
            cov /= nk;
            g.components[c].mean = mean;
            g.components[c].cov = cov;
            regularize(g.components[c], opts.reg_scale);
            g.components[c].finalize();
            if (opts.free_weights) g.weights[c] = nk / n;
        }
        if (opts.free_weights) {
            double s = 0.0;
            for (double w : g.weights) s += w;
            for (double& w : g.weights) w /= s;
        }
    }
    return res;
}

// --- CountCurve ------------------------------------------------------------------

double CountCurve::eval(double concentration) const {
    const double c = std::clamp(concentration, lo, hi);
    const double v = ((coeffs[0] * c + coeffs[1]) * c + coeffs[2]) * c + coeffs[3];
    return std::max(v, 0.0);
}

CountCurve fit_count_curve(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> xs;
    for (const auto& [c, l] : points)
        if (std::find(xs.begin(), xs.end(), c) == xs.end()) xs.push_back(c);
    if (xs.size() < 4) throw std::runtime_error("need at least 4 distinct concentrations");
    const int n = static_cast<int>(points.size());
    Eigen::MatrixXd A(n, 4);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        const double c = points[i].first;
        A(i, 0) = c * c * c;
        A(i, 1) = c * c;
        A(i, 2) = c;
        A(i, 3) = 1.0;
        b(i) = points[i].second;
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    CountCurve cc;
    cc.coeffs = {sol(0), sol(1), sol(2), sol(3)};
    return cc;
}

// --- GenerativeModel ---------------------------------------------------------------

const Mvn& GenerativeModel::nearest_dist_model(double concentration) const {
    if (dist_models.empty()) throw std::runtime_error("model has no distribution models");
    const Mvn* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [c, m] : dist_models) {
        const double d = std::abs(c - concentration);
        if (d < best_d) {
            best_d = d;
            best = &m;
        }
    }
    return *best;
}

ShapeVector sample_shape(const GenerativeModel& model, uint8_t label_class, Rng& rng) {
    Eigen::VectorXd v;
    if (label_class == label::kCell) {
        v = model.cell_model.sample(rng);
    } else if (label::is_debris(label_class)) {
        const int k = label_class - 2;
        if (k >= model.debris_model.k())
            throw std::runtime_error("debris class out of range");
        v = model.debris_model.components[k].sample(rng);
    } else {
        throw std::runtime_error("cannot sample shape for a non-object class");
    }
    ShapeVector s = ShapeVector::from_vector(v);
    s.area = std::max(s.area, 4.0);
    s.solidity = std::clamp(s.solidity, 0.05, 1.0);
    s.minor_axis = std::max(s.minor_axis, 0.5);
    s.major_axis = std::max(s.major_axis, s.minor_axis);
    s.thickness = std::clamp(s.thickness, 1.0, 4.0 * std::sqrt(s.area));
    s.fiber_length = std::clamp(s.fiber_length, 1.0, 8.0 * std::sqrt(s.area));
    s.n_branches = std::max(0.0, std::round(s.n_branches));
    return s;
}

// --- persistence --------------------------------------------------------------------

namespace {
constexpr const char* kModelMagic = "MHMODEL";
constexpr int kModelVersion = 1;

void write_vector(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
    os << name << " " << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
    os << "\n";
}
void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    os << name << " " << m.rows() << "\n";
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            os << ((r + c) ? " " : "") << m(r, c);
    os << "\n";
}
Eigen::VectorXd read_vector(std::istream& is, const std::string& expect) {
    std::string name;
    int n = 0;
    is >> name >> n;
    if (name != expect || n <= 0) throw std::runtime_error("model file: expected " + expect);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) is >> v(i);
    return v;
}
Eigen::MatrixXd read_matrix(std::istream& is, const std::string& expect) {
    std::string name;
    int n = 0;
    is >> name >> n;
    if (name != expect || n <= 0) throw std::runtime_error("model file: expected " + expect);
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) is >> m(r, c);
    return m;
}
}  // namespace

static void save_model_stream(const GenerativeModel& model, std::ostream& os) {
    os.precision(17);
    os << kModelMagic << " " << kModelVersion << "\n";
    os << "train_image_area_um2 " << model.train_image_area_um2 << "\n";
    write_vector(os, "cell_mean", model.cell_model.mean);
    write_matrix(os, "cell_cov", model.cell_model.cov);
    os << "debris_components " << model.debris_model.k() << "\n";
    os << "weights";
    for (double w : model.debris_model.weights) os << " " << w;
    os << "\n";
    for (int c = 0; c < model.debris_model.k(); ++c) {
        os << "component " << c << "\n";
        write_vector(os, "mean", model.debris_model.components[c].mean);
        write_matrix(os, "cov", model.debris_model.components[c].cov);
    }
    os << "dist_concentrations " << model.dist_models.size() << "\n";
    bool first = true;
    for (const auto& [c, m] : model.dist_models) {
        os << (first ? "" : " ") << c;
        first = false;
    }
    os << "\n";
    for (const auto& [c, m] : model.dist_models) {
        os << "dist " << c << "\n";
        write_vector(os, "mean", m.mean);
        write_matrix(os, "cov", m.cov);
    }
    os << "count_curve " << model.count_curve.coeffs[0] << " " << model.count_curve.coeffs[1]
       << " " << model.count_curve.coeffs[2] << " " << model.count_curve.coeffs[3] << "\n";
    os << "count_range " << model.count_curve.lo << " " << model.count_curve.hi << "\n";
}

void save_model(const GenerativeModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_model_stream(model, os);
    if (!os) throw std::runtime_error("failed writing: " + path);
}

static GenerativeModel load_model_stream(std::istream& is, const std::string& what) {
    std::string magic, key;
    int version = 0;
    is >> magic >> version;
    if (magic != kModelMagic) throw std::runtime_error("not a model file: " + what);
    if (version != kModelVersion) throw std::runtime_error("unsupported model version");
    GenerativeModel m;
    is >> key >> m.train_image_area_um2;
    if (key != "train_image_area_um2") throw std::runtime_error("model file: bad header");
    m.cell_model.mean = read_vector(is, "cell_mean");
    m.cell_model.cov = read_matrix(is, "cell_cov");
    m.cell_model.finalize();
    int kc = 0;
    is >> key >> kc;
    if (key != "debris_components" || kc < 1)
        throw std::runtime_error("model file: bad debris component count");
    is >> key;
    if (key != "weights") throw std::runtime_error("model file: expected weights");
    m.debris_model.weights.resize(kc);
    for (int i = 0; i < kc; ++i) is >> m.debris_model.weights[i];
    m.debris_model.components.resize(kc);
    for (int i = 0; i < kc; ++i) {
        int idx = 0;
        is >> key >> idx;
        if (key != "component" || idx != i)
            throw std::runtime_error("model file: bad component header");
        m.debris_model.components[i].mean = read_vector(is, "mean");
        m.debris_model.components[i].cov = read_matrix(is, "cov");
        m.debris_model.components[i].finalize();
    }
    int nd = 0;
    is >> key >> nd;
    if (key != "dist_concentrations") throw std::runtime_error("model file: expected dists");
    std::vector<int> concs(nd);
    for (int i = 0; i < nd; ++i) is >> concs[i];
    for (int i = 0; i < nd; ++i) {
        int c = 0;
        is >> key >> c;
        if (key != "dist" || c != concs[i])
            throw std::runtime_error("model file: bad dist header");
        Mvn dm;
        dm.mean = read_vector(is, "mean");
        dm.cov = read_matrix(is, "cov");
        dm.finalize();
        m.dist_models.emplace(c, std::move(dm));
    }
    is >> key;
    if (key != "count_curve") throw std::runtime_error("model file: expected count_curve");
    for (auto& c : m.count_curve.coeffs) is >> c;
    is >> key >> m.count_curve.lo >> m.count_curve.hi;
    if (key != "count_range") throw std::runtime_error("model file: expected count_range");
    if (!is) throw std::runtime_error("model file truncated: " + what);
    return m;
}

GenerativeModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_model_stream(is, path);
}

extern const char* kDefaultModelText;  // generated from data/default_model.txt

GenerativeModel default_model() {
    std::istringstream is(kDefaultModelText);
    return load_model_stream(is, "<default model>");
}

}  // namespace mh
