#pragma once

#include "wcluster/bench.hpp"
#include "wcluster/camera.hpp"
#include "wcluster/cluster.hpp"
#include "wcluster/common.hpp"
#include "wcluster/config.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/hungarian.hpp"
#include "wcluster/keyvalue.hpp"
#include "wcluster/parallel.hpp"
#include "wcluster/pipeline.hpp"
#include "wcluster/png_io.hpp"
#include "wcluster/preprocess.hpp"
#include "wcluster/projection.hpp"
#include "wcluster/render_export.hpp"
#include "wcluster/synthetic.hpp"
