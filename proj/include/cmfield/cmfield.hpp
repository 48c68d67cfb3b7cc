#pragma once

#include "cmfield/common.hpp"
#include "cmfield/cspace.hpp"
#include "cmfield/fft.hpp"
#include "cmfield/fixtures.hpp"
#include "cmfield/interpolation.hpp"
#include "cmfield/io.hpp"
#include "cmfield/neural_field.hpp"
#include "cmfield/orientation.hpp"
#include "cmfield/sampler.hpp"
#include "cmfield/tool.hpp"
#include "cmfield/trainer.hpp"
#include "cmfield/transform.hpp"
#include "cmfield/voxel_grid.hpp"
