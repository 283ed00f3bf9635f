#pragma once

#include "lps/functionals.hpp"
#include "lps/harness.hpp"
#include "lps/model.hpp"
#include "lps/rbound.hpp"

#include "json.hpp"

#include <string>

namespace lps {

using Json = nlohmann::ordered_json;

/// {"n":..,"mu":[..],"edges":[[u,v,w],..],"potential":[..],"dirichlet":[..]}
/// or the grid shorthand
/// {"grid":{"dims":[..],"coeff":..,"bc":"dirichlet"|"neumann","h":..}}.
/// Throws ValidationError naming the offending field.
Model model_from_json(const Json& j);
Model load_model_file(const std::string& path);

Json to_json(const Vec& v);
Vec vec_from_json(const Json& j);

Json to_json(const SubmarkovReport& r);
Json to_json(const LpsResult& r);
Json to_json(const InequalityReport& r);
Json to_json(const RboundEstimate& r);
Json to_json(const FamilyComparison& r);
Json to_json(const ChainReport& r);
Json to_json(const GradientBoundFit& r);
Json to_json(const OpNormEstimate& r);

/// temp file + rename, same directory.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} // namespace lps
