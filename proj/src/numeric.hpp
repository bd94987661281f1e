#pragma once

#include <cmath>
#include <cstddef>

namespace bdsde {

// Kahan-Babuska-Neumaier compensated accumulator.  Keeps long reductions
// (cell means, error sums, statistics) accurate to a few ulp independent of
// the number of terms, which the exactness contracts below rely on.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

  void reset() {
    sum_ = 0.0;
    comp_ = 0.0;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double neumaier_mean(const double* first, std::size_t count) {
  NeumaierSum s;
  for (std::size_t i = 0; i < count; ++i) s.add(first[i]);
  return s.value() / static_cast<double>(count);
}

}  // namespace bdsde
