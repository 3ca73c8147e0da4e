#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ghrl::nn {

inline constexpr double kProbFloor = 1e-8;

// Uniform in [0, 1) from the top 53 bits of one engine draw. Used instead of
// std::uniform_real_distribution so streams are identical across stdlibs.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

// Inverse-CDF draw; never returns an index with zero probability.
int sample(std::span<const double> probs, std::mt19937_64& rng);

// Lowest index of the largest entry.
int argmax(std::span<const double> values);

double entropy(std::span<const double> probs);

// Clamps every entry to at least `floor` and renormalises.
std::vector<double> floor_renormalize(std::span<const double> probs, double floor = kProbFloor);

// KL(p || q); both sides floored first.
double kl(std::span<const double> p, std::span<const double> q);

// log of the floored, renormalised probability of `a`.
double log_prob(std::span<const double> probs, int a);

}  // namespace ghrl::nn
