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

#ifndef TGGSYNC_ERROR_HPP
#define TGGSYNC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tggsync {

// Base class of every error thrown by the library. Each subclass carries a
// stable name used in CLI diagnostics; the what() string holds the details.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& msg)
      : std::runtime_error(name + ": " + msg), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define TGGSYNC_DEFINE_ERROR(Cls, Name)                   \
  class Cls : public Error {                              \
   public:                                                \
    explicit Cls(const std::string& msg) : Error(Name, msg) {} \
  }

// Referenced type name is not declared in the metamodel.
TGGSYNC_DEFINE_ERROR(UnknownTypeError, "UnknownType");
// An edge or correspondence link references a missing element.
TGGSYNC_DEFINE_ERROR(DanglingEdgeError, "DanglingEdge");
// Two elements within one scope share an id.
TGGSYNC_DEFINE_ERROR(DuplicateIdError, "DuplicateId");
// Rule composition glue maps elements of incompatible types.
TGGSYNC_DEFINE_ERROR(GlueTypeError, "GlueTypeError");
// Rule composition glue is structurally unsound (non-context consumer side,
// unmatched endpoints, and the like).
TGGSYNC_DEFINE_ERROR(GlueShapeError, "GlueShapeError");
// A graph, delta, or rule violates a structural well-formedness condition.
TGGSYNC_DEFINE_ERROR(ModelError, "ModelError");
// Exhaustive search would exceed its variable or node budget.
TGGSYNC_DEFINE_ERROR(TooLargeError, "TooLarge");
// Synthesis found no applicable replacing rule for a cluster.
TGGSYNC_DEFINE_ERROR(NoReplacingRuleError, "NoReplacingRule");
// Batch translation finished with untranslated source elements left over.
TGGSYNC_DEFINE_ERROR(UntranslatableRemainderError, "UntranslatableRemainder");
// An operation was invoked on inputs that violate its stated precondition.
TGGSYNC_DEFINE_ERROR(PreconditionError, "PreconditionError");
// Malformed input file or command line.
TGGSYNC_DEFINE_ERROR(InputError, "InputError");

#undef TGGSYNC_DEFINE_ERROR

}  // namespace tggsync

#endif  // TGGSYNC_ERROR_HPP
