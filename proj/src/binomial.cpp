#include "gtrie/binomial.hpp"

#include <cmath>

namespace gtrie {

void LogFactorials::grow(std::int64_t n) {
    const auto need = static_cast<std::size_t>(n) + 1;
    while (table_.size() < need) {
        const double k = static_cast<double>(table_.size());
        table_.push_back(table_.back() + std::log(k));
    }
}

const LogFactorials& log_factorials(std::int64_t upto) {
    thread_local LogFactorials table;
    table.grow(upto);
    return table;
}

}  // namespace gtrie
