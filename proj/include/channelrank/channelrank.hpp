#pragma once

#include "channelrank/aggregation.hpp"
#include "channelrank/classifiers.hpp"
#include "channelrank/dataset.hpp"
#include "channelrank/dataset_io.hpp"
#include "channelrank/evaluation.hpp"
#include "channelrank/experiment.hpp"
#include "channelrank/information.hpp"
#include "channelrank/knn_graph.hpp"
#include "channelrank/rankers.hpp"
#include "channelrank/report_io.hpp"
