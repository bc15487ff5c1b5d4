#include "mrgan/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mrgan/errors.hpp"

namespace mrgan {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
  return splitmix64(root ^ splitmix64(fnv1a(name)));
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  require(n > 0, "Rng::uniform_index: n must be positive");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() {
  // Box-Muller, cosine branch only; u1 nudged away from zero.
  const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::string_view name) const {
  std::mt19937_64 copy = engine_;
  const std::uint64_t salt = copy();  // peek one value without touching *this
  return Rng(std::mt19937_64(derive_seed(salt ^ tag_, name)), splitmix64(tag_ ^ fnv1a(name)));
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ' << tag_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::mt19937_64 engine;
  std::uint64_t tag = 0;
  is >> engine >> tag;
  if (is.fail()) throw FormatError("Rng::deserialize: malformed state string");
  return Rng(std::move(engine), tag);
}

}  // namespace mrgan
