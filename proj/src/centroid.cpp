#include "tsrules/centroid.hpp"

#include "tsrules/error.hpp"

namespace tsrules {

FeatureRow feature_row(const TimeSeriesSample& sample, const FeatureConfig& cfg) {
    const auto values = compute_features(sample, cfg).as_array();
    return Eigen::Map<const FeatureRow>(values.data());
}

CentroidModel baseline_centroid_train(const Dataset& dataset, const FeatureConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(dataset.size());
    Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kFeatureCount)> x(n, kFeatureCount);
    Eigen::Array<bool, Eigen::Dynamic, 1> anomalous(n);
    Eigen::Index labeled = 0;
    for (const auto& record : dataset.records) {
        if (!record.annotation) continue;
        x.row(labeled) = feature_row(record.sample, cfg);
        anomalous(labeled) = record.annotation->label == Label::Anomaly;
        ++labeled;
    }
    x.conservativeResize(labeled, Eigen::NoChange);
    anomalous.conservativeResize(labeled);

    const Eigen::Index n_anomaly = anomalous.count();
    if (n_anomaly == 0) throw Error(ErrorCode::MissingClass, "no anomaly samples to train on");
    if (n_anomaly == labeled) throw Error(ErrorCode::MissingClass, "no normal samples to train on");

    CentroidModel m;
    m.features = cfg;
    m.mean = x.colwise().mean();
    const auto centered = (x.rowwise() - m.mean).eval();
    m.scale = (centered.array().square().colwise().sum() / static_cast<double>(labeled)).sqrt().matrix();
    m.scale = (m.scale.array() < cfg.epsilon).select(1.0, m.scale);

    const auto z = (centered.array().rowwise() / m.scale.array()).matrix().eval();
    m.anomaly_centroid.setZero();
    m.normal_centroid.setZero();
    for (Eigen::Index i = 0; i < labeled; ++i) {
        (anomalous(i) ? m.anomaly_centroid : m.normal_centroid) += z.row(i);
    }
    m.anomaly_centroid /= static_cast<double>(n_anomaly);
    m.normal_centroid /= static_cast<double>(labeled - n_anomaly);
    return m;
}

Label baseline_centroid_predict(const CentroidModel& model, const FeatureRow& row) {
    const FeatureRow z = ((row - model.mean).array() / model.scale.array()).matrix();
    const double to_anomaly = (z - model.anomaly_centroid).squaredNorm();
    const double to_normal = (z - model.normal_centroid).squaredNorm();
    return to_anomaly < to_normal ? Label::Anomaly : Label::Normal;
}

Label baseline_centroid_predict(const CentroidModel& model, const TimeSeriesSample& sample) {
    return baseline_centroid_predict(model, feature_row(sample, model.features));
}

}  // namespace tsrules
