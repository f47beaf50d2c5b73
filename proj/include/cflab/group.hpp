#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cflab {

// Canonical encoding of a group element.  The integer layout is private to
// the provider that produced the element; equal codes mean equal elements.
class GroupElement {
 public:
  GroupElement() = default;
  explicit GroupElement(std::vector<std::int32_t> code)
      : code_(std::move(code)) {}

  const std::vector<std::int32_t>& code() const { return code_; }
  friend bool operator==(const GroupElement&, const GroupElement&) = default;

 private:
  std::vector<std::int32_t> code_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& x) const noexcept;
};

// Description of a group from the supported family: finite-rank free and
// free abelian groups, finite cyclic groups, and free / direct products of
// groups from the family (products may nest).
struct GroupSpec {
  enum class Kind { Free, Abelian, Cyclic, FreeProduct, DirectProduct };

  Kind kind = Kind::Free;
  int rank = 1;                    // Free, Abelian
  int order = 2;                   // Cyclic
  std::vector<GroupSpec> factors;  // FreeProduct, DirectProduct

  static GroupSpec free_group(int rank);
  static GroupSpec abelian(int rank);
  static GroupSpec cyclic(int order);
  static GroupSpec free_product(std::vector<GroupSpec> factors);
  static GroupSpec direct_product(std::vector<GroupSpec> factors);
};

// Exact arithmetic for one group together with a fixed symmetric generating
// set S (inverse-closed, identity excluded).  Generator order is part of the
// contract: every enumeration in the library is deterministic given it.
// Providers are immutable and all operations are pure.
class GroupProvider {
 public:
  virtual ~GroupProvider() = default;

  const GroupSpec& spec() const { return spec_; }
  virtual std::string describe() const = 0;
  virtual bool finite() const = 0;

  std::size_t generator_count() const { return generators_.size(); }
  const std::vector<GroupElement>& generators() const { return generators_; }
  const GroupElement& generator(std::size_t i) const { return generators_[i]; }
  // Index j with S[j] == S[i]^-1.
  std::size_t inverse_generator(std::size_t i) const {
    return inverse_pairing_[i];
  }
  const std::string& generator_name(std::size_t i) const {
    return generator_names_[i];
  }

  const GroupElement& identity() const { return identity_; }
  bool is_identity(const GroupElement& x) const { return x == identity_; }

  // Both operands must come from this provider; malformed codes are rejected
  // with std::invalid_argument.
  virtual GroupElement multiply(const GroupElement& x,
                                const GroupElement& y) const = 0;
  virtual GroupElement invert(const GroupElement& x) const = 0;
  virtual std::string to_string(const GroupElement& x) const = 0;

  // Canonical form of a word given as indices into S; the empty word is the
  // identity.  Out-of-range letters are rejected with std::invalid_argument.
  GroupElement normal_form(std::span<const std::int32_t> word) const;

  // Exact sphere sizes |S_0|, ..., |S_max_n| for the word metric of S,
  // computed from the growth series without enumerating elements.  Throws
  // ResourceLimitError if a count overflows 64 bits.
  std::vector<std::int64_t> sphere_sizes(int max_n) const;

 protected:
  explicit GroupProvider(GroupSpec spec) : spec_(std::move(spec)) {}

  // Coefficients 0..max_n of the spherical growth series of this group.
  virtual std::vector<std::int64_t> growth_series(int max_n) const = 0;

  GroupSpec spec_;
  GroupElement identity_;
  std::vector<GroupElement> generators_;
  std::vector<std::size_t> inverse_pairing_;
  std::vector<std::string> generator_names_;
};

// Builds a provider for the given spec; throws ConfigError if the spec is
// invalid (rank < 1, cyclic order < 2, products with fewer than two factors,
// trivial free-product factors, ...).
std::shared_ptr<const GroupProvider> make_provider(const GroupSpec& spec);

}  // namespace cflab
