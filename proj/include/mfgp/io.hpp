// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mfgp/dataset.hpp"
#include "mfgp/model.hpp"

namespace mfgp {

struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // empty cells parse to NaN
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values);

struct DatasetSpec {
  std::string response;  // column name; empty = last column
  std::string source;    // column name; empty = single source
};

MFDataset dataset_from_csv(const CsvTable& t, const DatasetSpec& spec);

// Self-describing JSON model document: schema version, configuration,
// estimated parameters, standardization transforms, the training rows and
// their fingerprint. Loading rebuilds the factorization caches, so a
// save -> load -> predict round trip is bit-identical.
void save_model(const std::string& path, const TrainedModel& m);
void save_model(const std::string& path, const EnsembleModel& m);

struct LoadedModel {
  bool ensemble = false;
  TrainedModel det;
  EnsembleModel ens;

  PredictiveDistribution predict(const MFDataset& q, bool include_noise) const {
    return ensemble ? ens.predict(q, include_noise) : det.predict(q, include_noise, false);
  }
  const GpCore& core() const { return ensemble ? *ens.core : *det.core; }
};

LoadedModel load_model(const std::string& path);

std::uint64_t fingerprint_dataset(const MFDataset& d);

}  // namespace mfgp
