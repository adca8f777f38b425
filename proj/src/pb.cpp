// Copyright 2024-2026 The tggsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tggsync/pb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "tggsync/error.hpp"

namespace tggsync {

int PBProblem::add_var(const std::string& name, double weight) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int v = static_cast<int>(names_.size());
  names_.push_back(name);
  weights_.push_back(weight);
  index_[name] = v;
  return v;
}

int PBProblem::var(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw InputError("unknown variable '" + name + "'");
  return it->second;
}

bool PBProblem::has_var(const std::string& name) const {
  return index_.count(name) > 0;
}

void PBProblem::set_weight(int var, double w) {
  weights_.at(static_cast<std::size_t>(var)) = w;
}

void PBProblem::add_constraint(PBConstraint c) {
  for (const PBTerm& t : c.terms)
    if (t.var < 0 || t.var >= static_cast<int>(names_.size()))
      throw InputError("constraint '" + c.name + "' uses an unknown variable");
  cons_.push_back(std::move(c));
}

namespace {

constexpr double kEps = 1e-9;

class Search {
 public:
  Search(const PBProblem& p, bool useBound, std::uint64_t nodeBudget)
      : p_(p), useBound_(useBound), budget_(nodeBudget) {
    order_.resize(p.var_count());
    for (std::size_t i = 0; i < p.var_count(); ++i)
      order_[i] = static_cast<int>(i);
    std::sort(order_.begin(), order_.end(),
              [&](int a, int b) { return p.name(a) < p.name(b); });
    best_.feasible = false;
  }

  Assignment run() {
    std::vector<std::int8_t> val(p_.var_count(), -1);
    dfs(val);
    return best_;
  }

 private:
  // Fixes all implied values; returns false on a wipe-out.
  bool propagate(std::vector<std::int8_t>& val) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const PBConstraint& c : p_.constraints()) {
        long long lo = 0, hi = 0;
        for (const PBTerm& t : c.terms) {
          const std::int8_t v = val[static_cast<std::size_t>(t.var)];
          if (v == 1) {
            lo += t.coef;
            hi += t.coef;
          } else if (v == -1) {
            lo += std::min(0LL, t.coef);
            hi += std::max(0LL, t.coef);
          }
        }
        auto violates = [&](long long l, long long h) {
          if ((c.rel == Rel::Le || c.rel == Rel::Eq) && l > c.rhs) return true;
          if ((c.rel == Rel::Ge || c.rel == Rel::Eq) && h < c.rhs) return true;
          return false;
        };
        if (violates(lo, hi)) return false;
        for (const PBTerm& t : c.terms) {
          auto& v = val[static_cast<std::size_t>(t.var)];
          if (v != -1) continue;
          const long long lo1 = lo - std::min(0LL, t.coef) + t.coef;
          const long long hi1 = hi - std::max(0LL, t.coef) + t.coef;
          const long long lo0 = lo - std::min(0LL, t.coef);
          const long long hi0 = hi - std::max(0LL, t.coef);
          const bool can1 = !violates(lo1, hi1);
          const bool can0 = !violates(lo0, hi0);
          if (!can1 && !can0) return false;
          if (!can1) {
            v = 0;
            lo = lo0;
            hi = hi0;
            changed = true;
          } else if (!can0) {
            v = 1;
            lo = lo1;
            hi = hi1;
            changed = true;
          }
        }
      }
    }
    return true;
  }

  void dfs(std::vector<std::int8_t> val) {
    if (budget_ && ++nodes_ > budget_)
      throw TooLargeError("search exceeded the node budget");
    if (!propagate(val)) return;
    if (useBound_ && best_.feasible) {
      double bound = 0.0;
      for (std::size_t i = 0; i < val.size(); ++i) {
        if (val[i] == 1)
          bound += p_.weight(static_cast<int>(i));
        else if (val[i] == -1)
          bound += std::max(0.0, p_.weight(static_cast<int>(i)));
      }
      if (bound <= best_.objective + kEps) return;
    }
    int pick = -1;
    for (int v : order_)
      if (val[static_cast<std::size_t>(v)] == -1) {
        pick = v;
        break;
      }
    if (pick < 0) {
      double obj = 0.0;
      for (std::size_t i = 0; i < val.size(); ++i)
        if (val[i] == 1) obj += p_.weight(static_cast<int>(i));
      if (!best_.feasible || obj > best_.objective + kEps) {
        best_.feasible = true;
        best_.objective = obj;
        best_.values.assign(val.begin(), val.end());
      }
      return;
    }
    auto v1 = val;
    v1[static_cast<std::size_t>(pick)] = 1;
    dfs(std::move(v1));
    val[static_cast<std::size_t>(pick)] = 0;
    dfs(std::move(val));
  }

  const PBProblem& p_;
  const bool useBound_;
  const std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  std::vector<int> order_;
  Assignment best_;
};

}  // namespace

Assignment solve(const PBProblem& p) { return Search(p, true, 0).run(); }

Assignment brute_force(const PBProblem& p, std::size_t varLimit,
                       std::uint64_t nodeBudget) {
  const std::uint64_t budget = p.var_count() > varLimit ? nodeBudget : 0;
  return Search(p, false, budget).run();
}

namespace {

std::string lp_number(double w) {
  if (std::fabs(w - std::llround(w)) < kEps) {
    char b[32];
    std::snprintf(b, sizeof b, "%lld", std::llround(w));
    return b;
  }
  char b[64];
  std::snprintf(b, sizeof b, "%g", w);
  return b;
}

std::string lp_sanitize(const std::string& s) {
  std::string t;
  for (char c : s)
    t += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (t.empty() || std::isdigit(static_cast<unsigned char>(t[0]))) t = "v" + t;
  return t;
}

void wrap_terms(std::ostringstream& os, const std::vector<std::string>& terms) {
  std::size_t col = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (col > 70) {
      os << "\n   ";
      col = 3;
    }
    os << " " << terms[i];
    col += terms[i].size() + 1;
  }
}

}  // namespace

std::string to_lp(const PBProblem& p) {
  std::vector<std::string> lpNames(p.var_count());
  std::set<std::string> taken;
  std::ostringstream comments;
  for (std::size_t i = 0; i < p.var_count(); ++i) {
    std::string s = lp_sanitize(p.name(static_cast<int>(i)));
    std::string use = s;
    for (int k = 2; taken.count(use); ++k) use = s + "_" + std::to_string(k);
    taken.insert(use);
    lpNames[i] = use;
    if (use != p.name(static_cast<int>(i)))
      comments << "\\ " << use << " = " << p.name(static_cast<int>(i)) << "\n";
  }

  std::ostringstream os;
  os << comments.str();
  os << "Maximize\n obj:";
  {
    std::vector<std::string> terms;
    bool firstTerm = true;
    for (std::size_t i = 0; i < p.var_count(); ++i) {
      const double w = p.weight(static_cast<int>(i));
      if (std::fabs(w) < kEps) continue;
      std::string t;
      if (w < 0)
        t = "- ";
      else if (!firstTerm)
        t = "+ ";
      firstTerm = false;
      const double aw = std::fabs(w);
      if (std::fabs(aw - 1.0) > kEps) t += lp_number(aw) + " ";
      t += lpNames[i];
      terms.push_back(t);
    }
    wrap_terms(os, terms);
  }
  os << "\nSubject To\n";
  std::set<std::string> conNames;
  std::size_t ci = 0;
  for (const PBConstraint& c : p.constraints()) {
    std::string cn = c.name.empty() ? "c" + std::to_string(ci) : lp_sanitize(c.name);
    std::string use = cn;
    for (int k = 2; conNames.count(use); ++k) use = cn + "_" + std::to_string(k);
    conNames.insert(use);
    ++ci;
    os << " " << use << ":";
    std::vector<std::string> terms;
    bool firstTerm = true;
    for (const PBTerm& t : c.terms) {
      std::string s;
      if (t.coef < 0)
        s = "- ";
      else if (!firstTerm)
        s = "+ ";
      firstTerm = false;
      const long long ac = std::llabs(t.coef);
      if (ac != 1) s += std::to_string(ac) + " ";
      s += lpNames[static_cast<std::size_t>(t.var)];
      terms.push_back(s);
    }
    if (terms.empty()) terms.push_back("0 " + (p.var_count() ? lpNames[0] : std::string("x")));
    wrap_terms(os, terms);
    switch (c.rel) {
      case Rel::Le: os << " <= "; break;
      case Rel::Ge: os << " >= "; break;
      case Rel::Eq: os << " = "; break;
    }
    os << c.rhs << "\n";
  }
  os << "Binary\n";
  {
    std::vector<std::string> terms(lpNames.begin(), lpNames.end());
    os << "";
    std::size_t col = 0;
    for (const std::string& t : terms) {
      if (col > 70) {
        os << "\n";
        col = 0;
      }
      os << " " << t;
      col += t.size() + 1;
    }
  }
  os << "\nEnd\n";
  return os.str();
}

double Weights::of(const std::string& varName) const {
  double w = 1.0;
  for (const auto& [key, delta] : adjust) {
    if (!key.empty() && key.back() == '*') {
      const std::string prefix = key.substr(0, key.size() - 1);
      if (varName.rfind(prefix, 0) == 0) w += delta;
    } else if (key == varName) {
      w += delta;
    }
  }
  return w;
}

void Weights::apply(PBProblem& p) const {
  for (std::size_t i = 0; i < p.var_count(); ++i)
    p.set_weight(static_cast<int>(i), of(p.name(static_cast<int>(i))));
}

}  // namespace tggsync
