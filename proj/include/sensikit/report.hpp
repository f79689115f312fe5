#pragma once

#include <string>

#include <json.hpp>

#include "sensikit/barrier.hpp"
#include "sensikit/conic.hpp"
#include "sensikit/directional.hpp"
#include "sensikit/expr.hpp"
#include "sensikit/fd_oracle.hpp"
#include "sensikit/kkt.hpp"
#include "sensikit/path_following.hpp"
#include "sensikit/sensitivity.hpp"
#include "sensikit/value_function.hpp"

namespace sensikit {

inline constexpr const char* kToolName = "sensikit";
inline constexpr const char* kToolVersion = "0.1.0";

// JSON views of the analysis results. Keys come out alphabetically sorted
// by the JSON library, so emit -> parse -> emit is a fixed point and two
// runs with the same inputs are byte-identical.
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const PrimalDualPoint& pt);
nlohmann::json to_json(const KKTResidual& r);
nlohmann::json to_json(const ActiveSetInfo& act);
nlohmann::json to_json(const CRCQReport& crcq);
nlohmann::json to_json(const CQReport& cq);
nlohmann::json to_json(const SensitivityResult& sens);
nlohmann::json to_json(const DirectionalDerivative& d);
nlohmann::json to_json(const ValueReport& vr);
nlohmann::json to_json(const PathStep& st);
nlohmann::json to_json(const PathTrace& trace);
nlohmann::json to_json(const ConeSpec& spec);
nlohmann::json to_json(const ConicSensitivity& sens);
nlohmann::json to_json(const FDJacobian& fd);
nlohmann::json to_json(const FDDirectional& fd);
nlohmann::json to_json(const OracleSolve& sol);

// Wraps a command body with the tool header, problem name, command name
// and elapsed wall time. Body keys land at the top level of the report.
nlohmann::json finalize_report(const std::string& problem,
                               const std::string& command,
                               nlohmann::json body, double wall_seconds);

}  // namespace sensikit
