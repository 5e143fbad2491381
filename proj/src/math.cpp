#include "scanvol/math.hpp"

#include <cassert>

namespace scanvol {

namespace {
constexpr size_t kBlock = 4096;
}

double deterministic_dot(const std::vector<double>& a, const std::vector<double>& b) {
    assert(a.size() == b.size());
    const size_t n = a.size();
    const size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long bi = 0; bi < static_cast<long>(nblocks); ++bi) {
        const size_t begin = static_cast<size_t>(bi) * kBlock;
        const size_t end = std::min(begin + kBlock, n);
        double s = 0.0;
        for (size_t i = begin; i < end; ++i) s += a[i] * b[i];
        partial[bi] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double deterministic_sum(const std::vector<double>& a) {
    const size_t n = a.size();
    const size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long bi = 0; bi < static_cast<long>(nblocks); ++bi) {
        const size_t begin = static_cast<size_t>(bi) * kBlock;
        const size_t end = std::min(begin + kBlock, n);
        double s = 0.0;
        for (size_t i = begin; i < end; ++i) s += a[i];
        partial[bi] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace scanvol
