#include "cocoa/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cocoa {

std::string Shape3::str() const {
    return std::to_string(nz) + "x" + std::to_string(ny) + "x" + std::to_string(nx);
}

double vmin(const Volume& v) {
    return *std::min_element(v.data.begin(), v.data.end());
}

double vmax(const Volume& v) {
    return *std::max_element(v.data.begin(), v.data.end());
}

double vsum(const Volume& v) {
    return std::accumulate(v.data.begin(), v.data.end(), 0.0);
}

double vmean(const Volume& v) {
    return v.data.empty() ? 0.0 : vsum(v) / static_cast<double>(v.data.size());
}

bool all_finite(const Volume& v) {
    return std::all_of(v.data.begin(), v.data.end(), [](double x) { return std::isfinite(x); });
}

void require_shape(const Volume& v, Shape3 expect, const char* what) {
    if (!(v.shape == expect))
        throw ShapeError(std::string(what) + ": expected " + expect.str() + ", got " +
                         v.shape.str());
}

}  // namespace cocoa
