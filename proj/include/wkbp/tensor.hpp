#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "wkbp/errors.hpp"

namespace wkbp {

// Dense row-major matrix of doubles. Rank <= 2 is enough for the whole
// model; vectors are n x 1 and scalars 1 x 1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }
    static Tensor column(std::vector<double> v) {
        Tensor t;
        t.rows = static_cast<int>(v.size());
        t.cols = 1;
        t.data = std::move(v);
        return t;
    }
    static Tensor from_rows(int r, int c, std::initializer_list<double> vals) {
        Tensor t(r, c);
        t.data.assign(vals);
        return t;
    }

    int size() const { return rows * cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double& operator[](int i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return data[static_cast<std::size_t>(i)]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

} // namespace wkbp
