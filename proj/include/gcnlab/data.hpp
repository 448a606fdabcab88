#pragma once

#include <filesystem>
#include <string>

#include "gcnlab/train.hpp"

namespace gcnlab {

// Zachary's karate club, embedded. 34 nodes, 78 edges, one-hot features
// (the graph carries no node attributes), four communities from the
// classic modularity partition, two labeled nodes per class (the lowest-
// and highest-index member of each community); everything else is test.
Dataset load_karate();

// Graph bundle directory format: five UTF-8 tab-separated files with no
// header rows and LF line endings.
//   edges.tsv    node <TAB> node
//   features.tsv node <TAB> feature index <TAB> value
//   labels.tsv   node <TAB> class id
//   splits.tsv   node <TAB> train|val|test
//   meta.tsv     n <TAB> feature dim <TAB> class count
// Feature rows are normalized to sum 1 on load (rows already summing to 1
// to machine precision are taken as is, which makes load(write(d)) exact).
// Label rates far from the conventional public splits produce a warning on
// stderr, not an error.
Dataset load_bundle(const std::filesystem::path& dir);

// Inverse of load_bundle for an in-memory dataset; float values are written
// in shortest round-trip decimal form.
void write_bundle(const Dataset& data, const std::filesystem::path& dir);

}  // namespace gcnlab
