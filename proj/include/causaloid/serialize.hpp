#pragma once

// JSON encoding of matrices and of the Causaloid registry. Matrices are
// row-major lists of C99 hex-float strings, so decoding is bit-exact.

#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "causaloid/causaloid.hpp"

namespace causaloid {

using Json = nlohmann::ordered_json;

inline constexpr int kCausaloidFormatVersion = 1;

std::string hex_float(double value);
double parse_hex_float(const std::string& text);  // SchemaError on junk

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

// Lowercase hex SHA-256 of the matrix shape and its hex-float entries.
std::string matrix_digest(const Eigen::MatrixXd& m);

Json causaloid_to_json(const Causaloid& causaloid);
// Rebuilds the registry through the validating entry points and re-checks
// the unit rows at every fiducial index. Throws SchemaError.
Causaloid causaloid_from_json(const Json& j);

}  // namespace causaloid
