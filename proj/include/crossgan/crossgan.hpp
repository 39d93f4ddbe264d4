#pragma once

#include "crossgan/baselines.hpp"
#include "crossgan/checkpoint.hpp"
#include "crossgan/config.hpp"
#include "crossgan/data_model.hpp"
#include "crossgan/dataset_io.hpp"
#include "crossgan/detection.hpp"
#include "crossgan/evaluation.hpp"
#include "crossgan/flow_io.hpp"
#include "crossgan/gan_training.hpp"
#include "crossgan/heatmap.hpp"
#include "crossgan/optical_flow.hpp"
#include "crossgan/patch_discriminator.hpp"
#include "crossgan/synthetic_data.hpp"
#include "crossgan/unet_generator.hpp"
