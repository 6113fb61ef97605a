#pragma once

#include <string>

#include <json.hpp>

#include "nelson/lemma_lab.hpp"
#include "nelson/spectral.hpp"

namespace nelson::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "nelson/1";

/// Deterministic JSON text: keys in insertion order, floats with 17
/// significant digits, non-finite floats as null.
std::string dump(const Json& j, int indent = 2);

/// %.17g; "nan"/"inf" spelled as C does.
std::string format_double(double x);

/// Number, or the string "inf" for an infinite cutoff.
Json lambda_to_json(double lambda);
double lambda_from_json(const Json& j);

Json to_json(const Estimate& e);
Json to_json(const ConstantsReport& r);
Json to_json(const quad::QuadResult& r);
quad::QuadResult quad_result_from_json(const Json& j);
Json to_json(const wick::ContractionDiagram& d);
Json to_json(const MatrixCoefficients& c);
Json to_json(const HydrogenRef& h);
Json to_json(const EnergyReport& r);
Json to_json(const FormBoundReport& r);
Json to_json(const CEpsBound& b);

}  // namespace nelson::io
