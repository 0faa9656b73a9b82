#include "bhsr/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <iomanip>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bhsr/parallel.hpp"

namespace bhsr {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

SampleStats sample_stats(std::span<const double> xs, bool antithetic) {
    SampleStats st;
    if (xs.empty()) return st;
    std::vector<double> units;
    if (antithetic && xs.size() >= 2) {
        units.reserve(xs.size() / 2 + 1);
        std::size_t k = 0;
        for (; k + 1 < xs.size(); k += 2) units.push_back(0.5 * (xs[k] + xs[k + 1]));
        if (k < xs.size()) units.push_back(xs[k]);
    } else {
        units.assign(xs.begin(), xs.end());
    }
    st.mean = mean(xs);
    st.n = units.size();
    if (units.size() < 2) return st;
    const double m = mean(units);
    std::vector<double> sq(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) sq[k] = (units[k] - m) * (units[k] - m);
    const double var = pairwise_sum(sq) / static_cast<double>(units.size() - 1);
    st.std_error = std::sqrt(var / static_cast<double>(units.size()));
    return st;
}

Quadrature gauss_hermite(int n) {
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        j(k, k - 1) = std::sqrt(static_cast<double>(k));
        j(k - 1, k) = j(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
    Quadrature q;
    for (int k = 0; k < n; ++k) {
        q.nodes.push_back(eig.eigenvalues()[k]);
        const double v0 = eig.eigenvectors()(0, k);
        q.weights.push_back(v0 * v0);
    }
    return q;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

std::string fnv1a_hex(std::span<const char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
    const unsigned cap = g_max_threads.load();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return cap == 0 ? hw : std::min(cap, hw);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return mix(seed ^ mix(stream + 1));
}

}  // namespace bhsr
