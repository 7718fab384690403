#pragma once

#include <optional>
#include <vector>

#include "helipad/image.hpp"

namespace helipad {

enum class Polarity { Bright, Dark };
enum class Connectivity { Four = 4, Eight = 8 };

/// Integer pixel position on a contour.
struct IPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(IPoint a, IPoint b) = default;
};

using Contour = std::vector<IPoint>;
using Polygon = std::vector<PointPx>;

/// Rec. 601 luma, rounded half up.
GrayImage to_grayscale(const RgbImage& rgb);
inline GrayImage to_grayscale(const GrayImage& gray) { return gray; }

/// Mean-based local threshold. The window is the `block` x `block` square centred on the
/// pixel, clipped to the image; the mean is the exact rational sum / count.
BinaryImage adaptive_threshold(const GrayImage& img, int block, int c, Polarity polarity = Polarity::Bright);

/// Separable Gaussian, radius ceil(3 sigma), clamp-to-edge.
GrayImage gaussian_blur(const GrayImage& img, double sigma);
std::vector<float> gaussian_kernel(double sigma);

/// Component labels (0 = background, 1..n in raster order of first pixel) and sizes.
struct Components {
  Raster<int> labels;
  std::vector<int> sizes;  // sizes[k] is the pixel count of label k + 1
};
Components label_components(const BinaryImage& img, Connectivity conn);

/// Keeps only the biggest component; ties go to the lowest label. `nullopt` on an empty mask.
std::optional<BinaryImage> largest_component(const BinaryImage& img, Connectivity conn = Connectivity::Eight);

/// Bilinear, pixel-centre aligned; samples outside the source clamp to the edge.
GrayImage resize(const GrayImage& img, int w, int h);
BinaryImage resize(const BinaryImage& img, int w, int h);

/// Bilinear resampling of `box` onto a w x h grid (clamp-to-edge outside the image).
GrayImage resample_region(const GrayImage& img, const BBox& box, int w, int h);

/// Outer boundaries of the 8-connected foreground components, counter-clockwise on screen.
std::vector<Contour> trace_contours(const BinaryImage& img);

/// Douglas-Peucker simplification of a closed contour.
Polygon approx_polygon(const Polygon& contour, double eps);
Polygon to_polygon(const Contour& contour);

/// Pixels whose centre lies inside the polygon (even-odd rule).
BinaryImage fill_polygon(const Polygon& poly, int w, int h);

/// Otsu's threshold t; foreground is `pixel > t`.
int otsu_threshold(const GrayImage& img);
BinaryImage threshold(const GrayImage& img, int t);

GrayImage to_gray(const BinaryImage& mask);

/// Pixel-count centroid of the foreground; `nullopt` when empty.
std::optional<PointPx> centroid(const BinaryImage& mask);
std::size_t count_foreground(const BinaryImage& mask);

}  // namespace helipad
