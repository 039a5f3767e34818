#pragma once

// Internal JSON plumbing shared by the model/artifact writers.

#include <Eigen/Dense>

#include <string>

#include "hetfuse/gp.hpp"
#include "json.hpp"

namespace hetfuse::detail {

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const nlohmann::json& arr);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows);

nlohmann::json gp_to_json(const GpModel& model);
GpModel gp_from_json(const nlohmann::json& doc);

void write_json_file(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

}  // namespace hetfuse::detail
