#include "cflab/group.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "cflab/errors.hpp"
#include "cflab/format.hpp"

namespace cflab {

std::size_t GroupElementHash::operator()(
    const GroupElement& x) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int32_t v : x.code()) {
    h ^= static_cast<std::uint32_t>(v);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 31;
  }
  return static_cast<std::size_t>(h);
}

namespace {

// ---------------------------------------------------------------------------
// Exact truncated power series over int64, used for spherical growth series.

using Series = std::vector<std::int64_t>;

[[noreturn]] void overflow(int degree) {
  throw ResourceLimitError("sphere count overflows 64 bits at radius " +
                           format_int(degree));
}

std::int64_t narrow(__int128 v, int degree) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    overflow(degree);
  }
  return static_cast<std::int64_t>(v);
}

Series mul_trunc(const Series& a, const Series& b, int max_n) {
  Series out(static_cast<std::size_t>(max_n) + 1, 0);
  for (int n = 0; n <= max_n; ++n) {
    __int128 acc = 0;
    int lo = std::max(0, n - static_cast<int>(b.size()) + 1);
    int hi = std::min(n, static_cast<int>(a.size()) - 1);
    for (int i = lo; i <= hi; ++i) {
      acc += static_cast<__int128>(a[i]) * b[n - i];
    }
    out[n] = narrow(acc, n);
  }
  return out;
}

// 1 / p for a series with constant term 1.
Series inverse_trunc(const Series& p, int max_n) {
  Series q(static_cast<std::size_t>(max_n) + 1, 0);
  q[0] = 1;
  for (int n = 1; n <= max_n; ++n) {
    __int128 acc = 0;
    int hi = std::min(n, static_cast<int>(p.size()) - 1);
    for (int i = 1; i <= hi; ++i) {
      acc += static_cast<__int128>(p[i]) * q[n - i];
    }
    q[n] = narrow(-acc, n);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Generator naming.  Top-level groups use the familiar alphabets; factors of
// a product draw from a shared pool so that names stay distinct.

std::string free_letter(int i) {
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  return "a" + format_int(i + 1);
}

std::string abelian_letter(int i, int rank) {
  if (rank <= 3) return std::string(1, static_cast<char>('x' + i));
  return "x" + format_int(i + 1);
}

std::string product_letter(int i) {
  static constexpr char pool[] = {'s', 't', 'u', 'v', 'w'};
  if (i < 5) return std::string(1, pool[i]);
  return "s" + format_int(i + 1);
}

int name_slots(const GroupSpec& spec) {
  switch (spec.kind) {
    case GroupSpec::Kind::Free:
    case GroupSpec::Kind::Abelian:
      return spec.rank;
    case GroupSpec::Kind::Cyclic:
      return 1;
    case GroupSpec::Kind::FreeProduct:
    case GroupSpec::Kind::DirectProduct: {
      int total = 0;
      for (const auto& f : spec.factors) total += name_slots(f);
      return total;
    }
  }
  return 0;
}

void validate_spec(const GroupSpec& spec) {
  switch (spec.kind) {
    case GroupSpec::Kind::Free:
    case GroupSpec::Kind::Abelian:
      if (spec.rank < 1 || spec.rank > 64) {
        throw ConfigError("group rank must be between 1 and 64, got " +
                          format_int(spec.rank));
      }
      break;
    case GroupSpec::Kind::Cyclic:
      if (spec.order < 2 || spec.order > 1'000'000) {
        throw ConfigError("cyclic order must be between 2 and 1000000, got " +
                          format_int(spec.order));
      }
      break;
    case GroupSpec::Kind::FreeProduct:
    case GroupSpec::Kind::DirectProduct:
      if (spec.factors.size() < 2) {
        throw ConfigError("products need at least two factors");
      }
      for (const auto& f : spec.factors) validate_spec(f);
      break;
  }
}

bool is_product(const GroupSpec& spec) {
  return spec.kind == GroupSpec::Kind::FreeProduct ||
         spec.kind == GroupSpec::Kind::DirectProduct;
}

[[noreturn]] void malformed(const char* what) {
  throw std::invalid_argument(std::string("malformed element code for ") +
                              what + " provider");
}

std::shared_ptr<const GroupProvider> build(const GroupSpec& spec,
                                           std::vector<std::string> names);

// ---------------------------------------------------------------------------

class FreeProvider final : public GroupProvider {
 public:
  FreeProvider(GroupSpec spec, std::vector<std::string> names)
      : GroupProvider(std::move(spec)), rank_(spec_.rank) {
    identity_ = GroupElement(std::vector<std::int32_t>{});
    for (int j = 0; j < rank_; ++j) {
      generators_.push_back(GroupElement({j + 1}));
      generators_.push_back(GroupElement({-(j + 1)}));
      inverse_pairing_.push_back(2 * static_cast<std::size_t>(j) + 1);
      inverse_pairing_.push_back(2 * static_cast<std::size_t>(j));
      generator_names_.push_back(names[j]);
      generator_names_.push_back(names[j] + "^-1");
    }
  }

  std::string describe() const override {
    return rank_ == 1 ? "Z" : "F" + format_int(rank_);
  }
  bool finite() const override { return false; }

  GroupElement multiply(const GroupElement& x,
                        const GroupElement& y) const override {
    validate(x);
    validate(y);
    std::vector<std::int32_t> out = x.code();
    for (std::int32_t letter : y.code()) {
      if (!out.empty() && out.back() == -letter) {
        out.pop_back();
      } else {
        out.push_back(letter);
      }
    }
    return GroupElement(std::move(out));
  }

  GroupElement invert(const GroupElement& x) const override {
    validate(x);
    std::vector<std::int32_t> out(x.code().rbegin(), x.code().rend());
    for (auto& letter : out) letter = -letter;
    return GroupElement(std::move(out));
  }

  std::string to_string(const GroupElement& x) const override {
    validate(x);
    if (x.code().empty()) return "1";
    std::string out;
    std::size_t i = 0;
    const auto& w = x.code();
    while (i < w.size()) {
      std::size_t j = i;
      while (j < w.size() && w[j] == w[i]) ++j;
      std::int64_t exp = static_cast<std::int64_t>(j - i) * (w[i] > 0 ? 1 : -1);
      if (!out.empty()) out += '*';
      out += generator_names_[2 * (std::abs(w[i]) - 1)];
      if (exp != 1) out += "^" + format_int(exp);
      i = j;
    }
    return out;
  }

 protected:
  std::vector<std::int64_t> growth_series(int max_n) const override {
    Series s(static_cast<std::size_t>(max_n) + 1, 0);
    s[0] = 1;
    if (max_n >= 1) s[1] = 2 * rank_;
    for (int n = 2; n <= max_n; ++n) {
      s[n] = narrow(static_cast<__int128>(s[n - 1]) * (2 * rank_ - 1), n);
    }
    return s;
  }

 private:
  void validate(const GroupElement& x) const {
    const auto& w = x.code();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0 || std::abs(w[i]) > rank_) malformed("free");
      if (i > 0 && w[i] == -w[i - 1]) malformed("free");
    }
  }

  int rank_;
};

class AbelianProvider final : public GroupProvider {
 public:
  AbelianProvider(GroupSpec spec, std::vector<std::string> names)
      : GroupProvider(std::move(spec)), rank_(spec_.rank) {
    identity_ = GroupElement(std::vector<std::int32_t>(rank_, 0));
    for (int j = 0; j < rank_; ++j) {
      std::vector<std::int32_t> plus(rank_, 0), minus(rank_, 0);
      plus[j] = 1;
      minus[j] = -1;
      generators_.push_back(GroupElement(std::move(plus)));
      generators_.push_back(GroupElement(std::move(minus)));
      inverse_pairing_.push_back(2 * static_cast<std::size_t>(j) + 1);
      inverse_pairing_.push_back(2 * static_cast<std::size_t>(j));
      generator_names_.push_back(names[j]);
      generator_names_.push_back(names[j] + "^-1");
    }
  }

  std::string describe() const override {
    return rank_ == 1 ? "Z" : "Z^" + format_int(rank_);
  }
  bool finite() const override { return false; }

  GroupElement multiply(const GroupElement& x,
                        const GroupElement& y) const override {
    validate(x);
    validate(y);
    std::vector<std::int32_t> out(rank_);
    for (int j = 0; j < rank_; ++j) {
      std::int64_t v = static_cast<std::int64_t>(x.code()[j]) + y.code()[j];
      if (v > std::numeric_limits<std::int32_t>::max() ||
          v < std::numeric_limits<std::int32_t>::min()) {
        throw ResourceLimitError("abelian exponent overflow");
      }
      out[j] = static_cast<std::int32_t>(v);
    }
    return GroupElement(std::move(out));
  }

  GroupElement invert(const GroupElement& x) const override {
    validate(x);
    std::vector<std::int32_t> out = x.code();
    for (auto& v : out) v = -v;
    return GroupElement(std::move(out));
  }

  std::string to_string(const GroupElement& x) const override {
    validate(x);
    std::string out;
    for (int j = 0; j < rank_; ++j) {
      std::int32_t e = x.code()[j];
      if (e == 0) continue;
      if (!out.empty()) out += '*';
      out += generator_names_[2 * static_cast<std::size_t>(j)];
      if (e != 1) out += "^" + format_int(e);
    }
    return out.empty() ? "1" : out;
  }

 protected:
  std::vector<std::int64_t> growth_series(int max_n) const override {
    // Z has spherical series (1 + x) / (1 - x); Z^r is its r-th power.
    Series z(static_cast<std::size_t>(max_n) + 1, 2);
    z[0] = 1;
    Series out(static_cast<std::size_t>(max_n) + 1, 0);
    out[0] = 1;
    for (int j = 0; j < rank_; ++j) out = mul_trunc(out, z, max_n);
    return out;
  }

 private:
  void validate(const GroupElement& x) const {
    if (x.code().size() != static_cast<std::size_t>(rank_)) malformed("abelian");
  }

  int rank_;
};

class CyclicProvider final : public GroupProvider {
 public:
  CyclicProvider(GroupSpec spec, std::vector<std::string> names)
      : GroupProvider(std::move(spec)), order_(spec_.order) {
    identity_ = GroupElement({0});
    generators_.push_back(GroupElement({1}));
    generator_names_.push_back(names[0]);
    if (order_ == 2) {
      inverse_pairing_.push_back(0);
    } else {
      generators_.push_back(GroupElement({order_ - 1}));
      generator_names_.push_back(names[0] + "^-1");
      inverse_pairing_.push_back(1);
      inverse_pairing_.push_back(0);
    }
  }

  std::string describe() const override { return "Z/" + format_int(order_); }
  bool finite() const override { return true; }

  GroupElement multiply(const GroupElement& x,
                        const GroupElement& y) const override {
    validate(x);
    validate(y);
    return GroupElement({(x.code()[0] + y.code()[0]) % order_});
  }

  GroupElement invert(const GroupElement& x) const override {
    validate(x);
    return GroupElement({(order_ - x.code()[0]) % order_});
  }

  std::string to_string(const GroupElement& x) const override {
    validate(x);
    std::int32_t v = x.code()[0];
    if (v == 0) return "1";
    std::int32_t e = 2 * v <= order_ ? v : v - order_;
    if (e == 1) return generator_names_[0];
    return generator_names_[0] + "^" + format_int(e);
  }

 protected:
  std::vector<std::int64_t> growth_series(int max_n) const override {
    Series s(static_cast<std::size_t>(max_n) + 1, 0);
    s[0] = 1;
    for (int n = 1; n <= max_n; ++n) {
      if (2 * n < order_) {
        s[n] = 2;
      } else if (2 * n == order_) {
        s[n] = 1;
      }
    }
    return s;
  }

 private:
  void validate(const GroupElement& x) const {
    if (x.code().size() != 1 || x.code()[0] < 0 || x.code()[0] >= order_) {
      malformed("cyclic");
    }
  }

  std::int32_t order_;
};

// Shared base for the two product providers: stores factors, concatenates
// generator blocks and offers code framing helpers.
class ProductProvider : public GroupProvider {
 public:
  ProductProvider(GroupSpec spec, std::vector<std::string> names)
      : GroupProvider(std::move(spec)) {
    std::size_t next = 0;
    for (const auto& fspec : spec_.factors) {
      int slots = name_slots(fspec);
      std::vector<std::string> sub(names.begin() + next,
                                   names.begin() + next + slots);
      next += static_cast<std::size_t>(slots);
      factors_.push_back(build(fspec, std::move(sub)));
    }
  }

 protected:
  std::string join_describe(const char* sep) const {
    std::string out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i) out += sep;
      bool wrap = is_product(factors_[i]->spec());
      if (wrap) out += '(';
      out += factors_[i]->describe();
      if (wrap) out += ')';
    }
    return out;
  }

  // Registers the generators of factor fi, mapped into this group by embed.
  template <typename Embed>
  void adopt_generators(std::size_t fi, Embed embed) {
    const auto& f = *factors_[fi];
    std::size_t base = generators_.size();
    for (std::size_t j = 0; j < f.generator_count(); ++j) {
      generators_.push_back(embed(f.generator(j)));
      generator_names_.push_back(f.generator_name(j));
      inverse_pairing_.push_back(base + f.inverse_generator(j));
    }
  }

  std::vector<std::shared_ptr<const GroupProvider>> factors_;
};

class FreeProductProvider final : public ProductProvider {
 public:
  FreeProductProvider(GroupSpec spec, std::vector<std::string> names)
      : ProductProvider(std::move(spec), std::move(names)) {
    identity_ = GroupElement(std::vector<std::int32_t>{});
    for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
      adopt_generators(fi, [fi](const GroupElement& g) {
        std::vector<std::int32_t> code{static_cast<std::int32_t>(fi),
                                       static_cast<std::int32_t>(
                                           g.code().size())};
        code.insert(code.end(), g.code().begin(), g.code().end());
        return GroupElement(std::move(code));
      });
    }
  }

  std::string describe() const override { return join_describe(" * "); }

  bool finite() const override { return false; }  // >= 2 nontrivial factors

  GroupElement multiply(const GroupElement& x,
                        const GroupElement& y) const override {
    auto syl = decode(x);
    for (auto& s : decode(y)) {
      if (syl.empty() || syl.back().factor != s.factor) {
        syl.push_back(std::move(s));
        continue;
      }
      GroupElement merged =
          factors_[s.factor]->multiply(syl.back().element, s.element);
      syl.pop_back();
      if (!factors_[s.factor]->is_identity(merged)) {
        syl.push_back({s.factor, std::move(merged)});
      }
    }
    return encode(syl);
  }

  GroupElement invert(const GroupElement& x) const override {
    auto syl = decode(x);
    std::reverse(syl.begin(), syl.end());
    for (auto& s : syl) s.element = factors_[s.factor]->invert(s.element);
    return encode(syl);
  }

  std::string to_string(const GroupElement& x) const override {
    auto syl = decode(x);
    if (syl.empty()) return "1";
    std::string out;
    for (const auto& s : syl) {
      if (!out.empty()) out += '*';
      out += factors_[s.factor]->to_string(s.element);
    }
    return out;
  }

 protected:
  std::vector<std::int64_t> growth_series(int max_n) const override {
    // With factor series S_i, the product's series S obeys
    // 1/S = sum_i 1/S_i - (k - 1).
    Series d(static_cast<std::size_t>(max_n) + 1, 0);
    for (const auto& f : factors_) {
      Series inv = inverse_trunc(f->sphere_sizes(max_n), max_n);
      for (int n = 0; n <= max_n; ++n) {
        d[n] = narrow(static_cast<__int128>(d[n]) + inv[n], n);
      }
    }
    d[0] -= static_cast<std::int64_t>(factors_.size()) - 1;
    return inverse_trunc(d, max_n);
  }

 private:
  struct Syllable {
    std::size_t factor;
    GroupElement element;
  };

  std::vector<Syllable> decode(const GroupElement& x) const {
    std::vector<Syllable> out;
    const auto& code = x.code();
    std::size_t pos = 0;
    while (pos < code.size()) {
      if (pos + 2 > code.size()) malformed("free product");
      std::int32_t fi = code[pos];
      std::int32_t len = code[pos + 1];
      if (fi < 0 || static_cast<std::size_t>(fi) >= factors_.size() ||
          len < 0 || pos + 2 + static_cast<std::size_t>(len) > code.size()) {
        malformed("free product");
      }
      GroupElement el(std::vector<std::int32_t>(
          code.begin() + pos + 2, code.begin() + pos + 2 + len));
      if (factors_[fi]->is_identity(el)) malformed("free product");
      if (!out.empty() && out.back().factor == static_cast<std::size_t>(fi)) {
        malformed("free product");
      }
      out.push_back({static_cast<std::size_t>(fi), std::move(el)});
      pos += 2 + static_cast<std::size_t>(len);
    }
    return out;
  }

  GroupElement encode(const std::vector<Syllable>& syl) const {
    std::vector<std::int32_t> code;
    for (const auto& s : syl) {
      code.push_back(static_cast<std::int32_t>(s.factor));
      code.push_back(static_cast<std::int32_t>(s.element.code().size()));
      code.insert(code.end(), s.element.code().begin(),
                  s.element.code().end());
    }
    return GroupElement(std::move(code));
  }
};

class DirectProductProvider final : public ProductProvider {
 public:
  DirectProductProvider(GroupSpec spec, std::vector<std::string> names)
      : ProductProvider(std::move(spec), std::move(names)) {
    std::vector<GroupElement> ids;
    for (const auto& f : factors_) ids.push_back(f->identity());
    identity_ = encode(ids);
    for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
      adopt_generators(fi, [&](const GroupElement& g) {
        std::vector<GroupElement> comps = ids;
        comps[fi] = g;
        return encode(comps);
      });
    }
  }

  std::string describe() const override { return join_describe(" x "); }

  bool finite() const override {
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const auto& f) { return f->finite(); });
  }

  GroupElement multiply(const GroupElement& x,
                        const GroupElement& y) const override {
    auto xc = decode(x);
    auto yc = decode(y);
    std::vector<GroupElement> out;
    out.reserve(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      out.push_back(factors_[i]->multiply(xc[i], yc[i]));
    }
    return encode(out);
  }

  GroupElement invert(const GroupElement& x) const override {
    auto xc = decode(x);
    std::vector<GroupElement> out;
    out.reserve(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      out.push_back(factors_[i]->invert(xc[i]));
    }
    return encode(out);
  }

  std::string to_string(const GroupElement& x) const override {
    auto xc = decode(x);
    std::string out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factors_[i]->is_identity(xc[i])) continue;
      if (!out.empty()) out += '*';
      out += factors_[i]->to_string(xc[i]);
    }
    return out.empty() ? "1" : out;
  }

 protected:
  std::vector<std::int64_t> growth_series(int max_n) const override {
    Series out(static_cast<std::size_t>(max_n) + 1, 0);
    out[0] = 1;
    for (const auto& f : factors_) {
      out = mul_trunc(out, f->sphere_sizes(max_n), max_n);
    }
    return out;
  }

 private:
  std::vector<GroupElement> decode(const GroupElement& x) const {
    std::vector<GroupElement> out;
    const auto& code = x.code();
    std::size_t pos = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (pos >= code.size()) malformed("direct product");
      std::int32_t len = code[pos];
      if (len < 0 || pos + 1 + static_cast<std::size_t>(len) > code.size()) {
        malformed("direct product");
      }
      out.emplace_back(std::vector<std::int32_t>(
          code.begin() + pos + 1, code.begin() + pos + 1 + len));
      pos += 1 + static_cast<std::size_t>(len);
    }
    if (pos != code.size()) malformed("direct product");
    return out;
  }

  GroupElement encode(const std::vector<GroupElement>& comps) const {
    std::vector<std::int32_t> code;
    for (const auto& c : comps) {
      code.push_back(static_cast<std::int32_t>(c.code().size()));
      code.insert(code.end(), c.code().begin(), c.code().end());
    }
    return GroupElement(std::move(code));
  }
};

std::shared_ptr<const GroupProvider> build(const GroupSpec& spec,
                                           std::vector<std::string> names) {
  switch (spec.kind) {
    case GroupSpec::Kind::Free:
      return std::make_shared<FreeProvider>(spec, std::move(names));
    case GroupSpec::Kind::Abelian:
      return std::make_shared<AbelianProvider>(spec, std::move(names));
    case GroupSpec::Kind::Cyclic:
      return std::make_shared<CyclicProvider>(spec, std::move(names));
    case GroupSpec::Kind::FreeProduct:
      return std::make_shared<FreeProductProvider>(spec, std::move(names));
    case GroupSpec::Kind::DirectProduct:
      return std::make_shared<DirectProductProvider>(spec, std::move(names));
  }
  throw ConfigError("unknown group kind");
}

}  // namespace

GroupSpec GroupSpec::free_group(int rank) {
  GroupSpec s;
  s.kind = Kind::Free;
  s.rank = rank;
  return s;
}

GroupSpec GroupSpec::abelian(int rank) {
  GroupSpec s;
  s.kind = Kind::Abelian;
  s.rank = rank;
  return s;
}

GroupSpec GroupSpec::cyclic(int order) {
  GroupSpec s;
  s.kind = Kind::Cyclic;
  s.order = order;
  return s;
}

GroupSpec GroupSpec::free_product(std::vector<GroupSpec> factors) {
  GroupSpec s;
  s.kind = Kind::FreeProduct;
  s.factors = std::move(factors);
  return s;
}

GroupSpec GroupSpec::direct_product(std::vector<GroupSpec> factors) {
  GroupSpec s;
  s.kind = Kind::DirectProduct;
  s.factors = std::move(factors);
  return s;
}

GroupElement GroupProvider::normal_form(
    std::span<const std::int32_t> word) const {
  GroupElement out = identity_;
  for (std::int32_t letter : word) {
    if (letter < 0 || static_cast<std::size_t>(letter) >= generators_.size()) {
      throw std::invalid_argument("generator index " + format_int(letter) +
                                  " out of range");
    }
    out = multiply(out, generators_[letter]);
  }
  return out;
}

std::vector<std::int64_t> GroupProvider::sphere_sizes(int max_n) const {
  if (max_n < 0) throw std::invalid_argument("negative radius");
  return growth_series(max_n);
}

std::shared_ptr<const GroupProvider> make_provider(const GroupSpec& spec) {
  validate_spec(spec);
  int slots = name_slots(spec);
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(slots));
  for (int i = 0; i < slots; ++i) {
    switch (spec.kind) {
      case GroupSpec::Kind::Free:
        names.push_back(free_letter(i));
        break;
      case GroupSpec::Kind::Abelian:
        names.push_back(abelian_letter(i, spec.rank));
        break;
      case GroupSpec::Kind::Cyclic:
        names.push_back("t");
        break;
      default:
        names.push_back(product_letter(i));
        break;
    }
  }
  return build(spec, std::move(names));
}

}  // namespace cflab
