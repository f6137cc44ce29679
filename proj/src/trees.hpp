#pragma once

#include "xcohort/learners.hpp"

namespace xcohort::learn {

double tree_value(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x);
Json tree_to_json(const Tree& t);
Tree tree_from_json(const Json& j);

}  // namespace xcohort::learn
