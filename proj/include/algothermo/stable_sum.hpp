#ifndef ALGOTHERMO_STABLE_SUM_HPP
#define ALGOTHERMO_STABLE_SUM_HPP

#include <cmath>

namespace algothermo {

// Neumaier compensated accumulator.
class StableSum {
 public:
  StableSum() = default;
  explicit StableSum(double init) : sum_(init) {}

  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

}  // namespace algothermo

#endif  // ALGOTHERMO_STABLE_SUM_HPP
