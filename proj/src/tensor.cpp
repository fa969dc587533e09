#include "fire/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
    Tensor t;
    t.shape = shape;
    t.data.assign(shape_numel(shape), 0.0f);
    return t;
}

Tensor Tensor::full(const std::vector<int>& shape, float value) {
    Tensor t = zeros(shape);
    for (auto& v : t.data) v = value;
    return t;
}

std::size_t Tensor::shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return shape.empty() ? 0 : n;
}

float& Tensor::at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
}

float Tensor::at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }
bool same_shape(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

int argmax(const Tensor& t) {
    int best = 0;
    for (std::size_t i = 1; i < t.data.size(); ++i)
        if (t.data[i] > t.data[best]) best = static_cast<int>(i);
    return best;
}

std::uint64_t tensor_digest(const Tensor& t, std::uint64_t h) {
    h = fnv1a64(t.shape.data(), t.shape.size() * sizeof(int), h);
    return fnv1a64(t.data.data(), t.data.size() * sizeof(float), h);
}

double dot(const Tensor& a, const Tensor& b) {
    if (!same_shape(a, b)) throw ShapeError("dot: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += static_cast<double>(a.data[i]) * b.data[i];
    return acc;
}

double norm(const Tensor& t) {
    double acc = 0.0;
    for (float v : t.data) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!same_shape(a, b))
        throw ShapeError("max_abs_diff: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = std::abs(static_cast<double>(a.data[i]) - b.data[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace fire
