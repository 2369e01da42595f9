#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cwest {

/// Finite discrete distribution over backoff values 0..support_len()-1.
/// Construction enforces non-negativity and unit mass (tolerance 1e-9).
class Pmf {
public:
    Pmf() = default;

    explicit Pmf(std::vector<double> probs) : probs_(std::move(probs)) { validate(); }

    static Pmf uniform(std::size_t width, std::size_t support_len) {
        if (width == 0 || width > support_len)
            throw std::invalid_argument("Pmf::uniform: bad width");
        std::vector<double> p(support_len, 0.0);
        for (std::size_t k = 0; k < width; ++k) p[k] = 1.0 / static_cast<double>(width);
        return Pmf(std::move(p));
    }

    /// Normalize counts into a distribution.
    static Pmf from_counts(const std::vector<double>& counts, std::size_t support_len) {
        double total = 0.0;
        for (double c : counts) total += c;
        if (total <= 0.0) throw std::invalid_argument("Pmf::from_counts: empty mass");
        std::vector<double> p(support_len, 0.0);
        if (counts.size() > support_len)
            throw std::invalid_argument("Pmf::from_counts: counts exceed support");
        for (std::size_t k = 0; k < counts.size(); ++k) p[k] = counts[k] / total;
        return Pmf(std::move(p));
    }

    std::size_t support_len() const { return probs_.size(); }
    double operator[](std::size_t k) const { return probs_[k]; }
    const std::vector<double>& probs() const { return probs_; }

    bool operator==(const Pmf& o) const { return probs_ == o.probs_; }

private:
    void validate() const {
        if (probs_.empty()) throw std::invalid_argument("Pmf: empty support");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("Pmf: negative or NaN entry");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("Pmf: mass " + std::to_string(sum) + " != 1");
    }

    std::vector<double> probs_;
};

}  // namespace cwest
