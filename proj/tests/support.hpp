#pragma once

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unistd.h>

#include "xcohort/core_data.hpp"
#include "xcohort/error.hpp"

// Asserts that expr throws xcohort::Error with the given code.
#define CHECK_ERROR_CODE(expr, error_code)                                   \
    do {                                                                     \
        bool thrown_ = false;                                                \
        try {                                                                \
            (void)(expr);                                                    \
        } catch (const xcohort::Error& e_) {                                 \
            thrown_ = true;                                                  \
            CHECK_MESSAGE(e_.code() == (error_code), e_.what());             \
        }                                                                    \
        CHECK_MESSAGE(thrown_, "expected " << xcohort::to_string(error_code)); \
    } while (0)

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("xcohort_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Rows named s0.., features f0.. (provenance OTHER), batches as given.
inline xcohort::data::FeatureMatrix make_matrix(const Eigen::MatrixXd& values, const std::vector<std::string>& batches,
                                                const std::string& prefix = "s") {
    std::vector<xcohort::data::SampleMeta> samples;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        xcohort::data::SampleMeta m;
        m.sample_id = prefix + std::to_string(i);
        m.batch_id = batches[static_cast<std::size_t>(i)];
        samples.push_back(m);
    }
    std::vector<xcohort::data::FeatureDescriptor> descriptors;
    for (Eigen::Index j = 0; j < values.cols(); ++j) descriptors.push_back(xcohort::data::FeatureDescriptor::parse("f" + std::to_string(j)));
    return xcohort::data::FeatureMatrix(std::move(samples), std::move(descriptors), values);
}

inline xcohort::data::FeatureMatrix make_matrix(const Eigen::MatrixXd& values, const std::string& batch = "B1",
                                                const std::string& prefix = "s") {
    return make_matrix(values, std::vector<std::string>(static_cast<std::size_t>(values.rows()), batch), prefix);
}

}  // namespace testing
