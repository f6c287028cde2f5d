#pragma once

// JSON forms of the in-memory results. Values are stored unrounded.

#include <json.hpp>

#include "cbaudit/bias.hpp"
#include "cbaudit/calibrate.hpp"

namespace cbaudit {

void to_json(nlohmann::json& j, const CcdfCurve& c);
void from_json(const nlohmann::json& j, CcdfCurve& c);
void to_json(nlohmann::json& j, const ValidationMatrix& m);
void from_json(const nlohmann::json& j, ValidationMatrix& m);
void to_json(nlohmann::json& j, const CorrelationResult& r);
void from_json(const nlohmann::json& j, CorrelationResult& r);
void to_json(nlohmann::json& j, const DatasetColumn& c);
void from_json(const nlohmann::json& j, DatasetColumn& c);
void to_json(nlohmann::json& j, const ProportionMatrix& m);
void from_json(const nlohmann::json& j, ProportionMatrix& m);
void to_json(nlohmann::json& j, const ResetFlag& f);
void from_json(const nlohmann::json& j, ResetFlag& f);

}  // namespace cbaudit
