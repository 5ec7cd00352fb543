#pragma once

#include <utility>
#include <vector>

#include "microharvest/geom.hpp"
#include "microharvest/image.hpp"

namespace mh {

// Binary masks are GridU8 with values 0/1.

// --- filtering -------------------------------------------------------------

ImageF gaussian_blur(const ImageF& img, double sigma);

// Contrast-limited adaptive histogram equalization. clip_limit is the usual
// relative clip factor (1 = uniform limit), tile_px the tile edge length.
ImageU8 clahe(const ImageU8& img, double clip_limit, int tile_px);

ImageF scharr_magnitude(const ImageF& img);
void sobel_gradients(const ImageF& img, ImageF& gx, ImageF& gy);

// --- thresholding ----------------------------------------------------------

// Otsu threshold over the 256-bin histogram; returns the bin t maximizing
// between-class variance. Foreground convention is chosen by the caller.
int otsu_threshold(const ImageU8& img);
int otsu_threshold_masked(const ImageU8& img, const GridU8& mask);

// Pixels >= hi seed; pixels >= lo kept when 8-connected to a seed.
GridU8 hysteresis_threshold(const ImageF& img, double lo, double hi);

GridU8 canny(const ImageF& img, double lo, double hi, double sigma);

// --- binary morphology (disk structuring element, center-distance <= r) -----

GridU8 erode(const GridU8& mask, int radius);
GridU8 dilate(const GridU8& mask, int radius);
inline GridU8 open_mask(const GridU8& m, int r) { return dilate(erode(m, r), r); }
inline GridU8 close_mask(const GridU8& m, int r) { return erode(dilate(m, r), r); }

// --- components ------------------------------------------------------------

// Labels foreground components; background gets -1. Returns component count.
int connected_components(const GridU8& mask, GridI32& ids, int connectivity = 8);

struct Component {
    int id = 0;
    int area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    double cx = 0.0, cy = 0.0;     // centroid in pixel-center coordinates
};
std::vector<Component> component_stats(const GridI32& ids, int count);

// Cropped 0/1 mask of one component, padded by `pad` background pixels.
GridU8 component_mask(const GridI32& ids, const Component& c, int pad = 1);

GridU8 fill_holes(const GridU8& mask);
GridU8 remove_border_components(const GridU8& mask);
GridU8 filter_components_by_area(const GridU8& mask, int min_area, int max_area);

// --- skeletons ---------------------------------------------------------------

GridU8 zhang_suen_thin(const GridU8& mask);

struct SkeletonInfo {
    GridU8 skeleton;
    // Endpoint-anchored maximal paths: endpoint -> junction or other endpoint.
    std::vector<std::vector<std::pair<int, int>>> branches;
    std::vector<double> branch_lengths;   // Euclidean step sums
    int endpoints = 0;
    int junctions = 0;
    int skeleton_pixels = 0;
};
// Thins the mask, then extracts branches; branches shorter than min_branch_len
// are dropped from the counts (thinning spur suppression).
SkeletonInfo analyze_skeleton(const GridU8& mask, double min_branch_len = 0.0);

// --- geometry over pixel sets ------------------------------------------------

// Convex hull of points (monotone chain), counterclockwise, no duplicates.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

// Number of pixels whose centers lie inside or on the hull of the mask's
// pixel centers. Degenerate (collinear) masks are handled.
int convex_area_pixels(const GridU8& mask);

// Welzl's algorithm; the input order is shuffled with a fixed seed.
Circle min_enclosing_circle(std::vector<Vec2> pts);

double mean_under_mask(const ImageU8& img, const GridU8& mask, int off_x = 0, int off_y = 0);

}  // namespace mh
