#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>

#include "linalg.hpp"

namespace xvabsde {

// Adapted scalar process sampled on the grid: a constant, a deterministic
// curve of time, or a fully pathwise array (N x (m+1)).
class GridProcess {
  public:
    GridProcess() : kind_(Kind::Constant), value_(0.0) {}

    static GridProcess constant(double v) {
        GridProcess g;
        g.kind_ = Kind::Constant;
        g.value_ = v;
        return g;
    }
    static GridProcess curve(std::function<double(double)> fn) {
        GridProcess g;
        g.kind_ = Kind::Curve;
        g.curve_ = std::move(fn);
        return g;
    }
    static GridProcess pathwise(ArrayXXd values) {
        GridProcess g;
        g.kind_ = Kind::Pathwise;
        g.values_ = std::move(values);
        return g;
    }

    bool deterministic() const { return kind_ != Kind::Pathwise; }

    double operator()(std::size_t path, std::size_t node, double t) const {
        switch (kind_) {
            case Kind::Constant:
                return value_;
            case Kind::Curve:
                return curve_(t);
            case Kind::Pathwise:
            default:
                if (static_cast<Eigen::Index>(path) >= values_.rows() ||
                    static_cast<Eigen::Index>(node) >= values_.cols()) {
                    throw std::invalid_argument("GridProcess: index out of range");
                }
                return values_(path, node);
        }
    }

  private:
    enum class Kind { Constant, Curve, Pathwise };
    Kind kind_;
    double value_ = 0.0;
    std::function<double(double)> curve_;
    ArrayXXd values_;
};

}  // namespace xvabsde
