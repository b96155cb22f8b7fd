#pragma once

#include "asgreg/errors.hpp"
#include "asgreg/types.hpp"
#include "asgreg/rasterizer.hpp"
#include "asgreg/asg.hpp"
#include "asgreg/flow.hpp"
#include "asgreg/pose.hpp"
#include "asgreg/verify.hpp"
#include "asgreg/icp.hpp"
#include "asgreg/io.hpp"
#include "asgreg/scene.hpp"
#include "asgreg/pipeline.hpp"
#include "asgreg/evaluate.hpp"
