#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fire {

// Dense row-major float32 tensor. Images use shape {C, H, W}, flat vectors
// shape {D}. Reductions over elements accumulate in double.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d);

    static Tensor zeros(const std::vector<int>& shape);
    static Tensor full(const std::vector<int>& shape, float value);
    static std::size_t shape_numel(const std::vector<int>& shape);

    std::size_t numel() const { return data.size(); }
    bool empty() const { return data.empty(); }

    float& operator[](std::size_t i) { return data[i]; }
    float operator[](std::size_t i) const { return data[i]; }

    // {C,H,W} accessors.
    float& at(int c, int y, int x);
    float at(int c, int y, int x) const;
    int channels() const { return shape.size() == 3 ? shape[0] : 1; }
    int height() const { return shape.size() == 3 ? shape[1] : 1; }
    int width() const { return shape.size() == 3 ? shape[2] : static_cast<int>(numel()); }
};

bool same_shape(const Tensor& a, const Tensor& b);
bool same_shape(const std::vector<int>& a, const std::vector<int>& b);
std::string shape_str(const std::vector<int>& shape);
bool all_finite(const Tensor& t);

// Index of the largest element; lowest index wins ties.
int argmax(const Tensor& t);

// FNV-1a over the raw float bytes. Used for purity and determinism checks.
std::uint64_t tensor_digest(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ULL);

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace fire
