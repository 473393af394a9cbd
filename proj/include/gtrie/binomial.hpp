#pragma once

#include <cstdint>
#include <vector>

namespace gtrie {

// Growing table of log k!; all binomial and multinomial weights in this
// project are assembled in log-space from it and exponentiated at the end.
class LogFactorials {
  public:
    explicit LogFactorials(std::int64_t n = 1) { grow(n); }

    void grow(std::int64_t n);

    double operator()(std::int64_t k) const { return table_[static_cast<std::size_t>(k)]; }

    // log C(n, k)
    double log_choose(std::int64_t n, std::int64_t k) const {
        return table_[static_cast<std::size_t>(n)] - table_[static_cast<std::size_t>(k)] -
               table_[static_cast<std::size_t>(n - k)];
    }

  private:
    std::vector<double> table_{0.0, 0.0};  // log 0!, log 1!
};

// Thread-local shared instance, grown on demand.
const LogFactorials& log_factorials(std::int64_t upto);

}  // namespace gtrie
