#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polygame/error.hpp"

namespace polygame {

// Iterates keep queue loads at least this far below the service rate.
inline constexpr double kQueueMargin = 1e-6;

// Nonnegative, increasing, convex, differentiable resource cost c(x).
class CostFunction {
 public:
  enum class Form { polynomial, queue, affine };

  // c(x) = a_0 + a_1 x + ... + a_k x^k
  static CostFunction polynomial(std::vector<double> coefficients) {
    if (coefficients.empty()) coefficients.push_back(0.0);
    for (double a : coefficients) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw InvalidSpec("polynomial cost coefficients must be finite and nonnegative");
      }
    }
    CostFunction c;
    c.form_ = Form::polynomial;
    c.coef_ = std::move(coefficients);
    return c;
  }

  static CostFunction zero() { return polynomial({0.0}); }

  // Mean M/M/1 delay 1/(mu - x).
  static CostFunction queue(double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidSpec("queue service rate must be > 0");
    CostFunction c;
    c.form_ = Form::queue;
    c.mu_ = mu;
    return c;
  }

  // c * (x + b)
  static CostFunction affine(double scale, double offset) {
    if (!(scale >= 0.0) || !(scale * offset >= 0.0) || !std::isfinite(scale * offset)) {
      throw InvalidSpec("affine cost c*(x+b) needs c >= 0 and c*b >= 0");
    }
    CostFunction c;
    c.form_ = Form::affine;
    c.scale_ = scale;
    c.offset_ = offset;
    return c;
  }

  Form form() const { return form_; }
  const std::vector<double>& coefficients() const { return coef_; }
  double mu() const { return mu_; }
  double scale() const { return scale_; }
  double offset() const { return offset_; }

  // Largest load an iterate may place on the resource.
  double domain_limit() const {
    return form_ == Form::queue ? mu_ - kQueueMargin : std::numeric_limits<double>::infinity();
  }

  double value(double x) const {
    switch (form_) {
      case Form::polynomial: {
        double v = 0.0;
        for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) v = v * x + *it;
        return v;
      }
      case Form::queue:
        check_queue(x);
        return 1.0 / (mu_ - x);
      case Form::affine:
        return scale_ * (x + offset_);
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (form_) {
      case Form::polynomial: {
        double v = 0.0;
        for (std::size_t j = coef_.size(); j-- > 1;) v = v * x + static_cast<double>(j) * coef_[j];
        return v;
      }
      case Form::queue:
        check_queue(x);
        return 1.0 / ((mu_ - x) * (mu_ - x));
      case Form::affine:
        return scale_;
    }
    return 0.0;
  }

  // Strictly increasing on x >= 0 (needed for uniqueness statements).
  bool strictly_increasing() const {
    switch (form_) {
      case Form::polynomial:
        for (std::size_t j = 1; j < coef_.size(); ++j) {
          if (coef_[j] > 0.0) return true;
        }
        return false;
      case Form::queue: return true;
      case Form::affine: return scale_ > 0.0;
    }
    return false;
  }

 private:
  void check_queue(double x) const {
    if (x >= mu_) {
      throw QueueOverload("load " + std::to_string(x) + " reaches service rate " + std::to_string(mu_));
    }
  }

  Form form_ = Form::polynomial;
  std::vector<double> coef_{0.0};
  double mu_ = 0.0;
  double scale_ = 0.0;
  double offset_ = 0.0;
};

}  // namespace polygame
