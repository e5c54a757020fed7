#pragma once

#include <Eigen/Core>

#include "tsrules/dataset.hpp"
#include "tsrules/features.hpp"

namespace tsrules {

using FeatureRow = Eigen::Matrix<double, 1, static_cast<int>(kFeatureCount)>;

// Nearest-class-centroid classifier in z-standardized feature space. Unlike a
// fixed rule, its decisions depend on the class mix of the training data.
struct CentroidModel {
    FeatureConfig features;
    FeatureRow mean;
    FeatureRow scale;  // per-feature std, 1 where the feature is constant
    FeatureRow anomaly_centroid;
    FeatureRow normal_centroid;
};

FeatureRow feature_row(const TimeSeriesSample& sample, const FeatureConfig& cfg);

// Throws Error(MissingClass) unless both labels occur.
CentroidModel baseline_centroid_train(const Dataset& dataset, const FeatureConfig& cfg);

// Ties go to Normal.
Label baseline_centroid_predict(const CentroidModel& model, const TimeSeriesSample& sample);
Label baseline_centroid_predict(const CentroidModel& model, const FeatureRow& row);

}  // namespace tsrules
