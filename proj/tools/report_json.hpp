#pragma once

#include <ostream>

#include "json.hpp"
#include "kleaf/errors.hpp"
#include "kleaf/solver.hpp"
#include "kleaf/verify.hpp"

namespace kleaf::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const SVec& v);
Json to_json(const SMat& m);
Json to_json(const FitResult& fit);
Json to_json(const CheckReport& check);
Json to_json(const CurvatureAtPoint& curv);
Json to_json(const Leaf& leaf);
Json to_json(const FoliationReport& report);
Json error_json(const Error& e);

/// index, node coordinates, weight, w, sigma_k, principal curvatures,
/// volume density and embedded position of every node.
void write_leaf_csv(std::ostream& os, const Leaf& leaf, int k);

}  // namespace kleaf::cli
