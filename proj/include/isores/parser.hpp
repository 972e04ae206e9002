#pragma once

// Parser for the system-definition expression language.
//
// Grammar (whitespace insensitive):
//   expr   := ['+'|'-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := NUMBER
//           | 'r' ['^' ['-'] UINT]
//           | ('cos'|'sin') '(' angle ')' ['^' UINT]
//   angle  := ['+'|'-'] aterm (('+'|'-') aterm)*
//   aterm  := [UINT ['/' UINT] '*'] (ANGLEVAR | 'S')
//
// ANGLEVAR is "phi" or "psi" depending on the frame the expression lives in.
// Fractional frequencies are allowed on S only and must reduce to an integer
// over the global denominator varkappa.

#include <string>

#include "isores/trigpoly.hpp"

namespace isores {

enum class AngleVar { phi, psi };

// Throws std::invalid_argument with a position-tagged message on syntax
// errors, non-integer frequencies and unknown identifiers.
TrigPoly parse_expr(const std::string& src, AngleVar angle_var, int denom_s);

}  // namespace isores
