// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sasa.hpp
 * @brief  Umbrella header.
 */
#pragma once

#include <sasa/alignment.hpp>
#include <sasa/diffnum/adam.hpp>
#include <sasa/diffnum/grad_check.hpp>
#include <sasa/diffnum/ops.hpp>
#include <sasa/diffnum/sparsemax.hpp>
#include <sasa/diffnum/tensor.hpp>
#include <sasa/eval.hpp>
#include <sasa/io.hpp>
#include <sasa/model.hpp>
#include <sasa/sample.hpp>
#include <sasa/segmenter.hpp>
#include <sasa/structure.hpp>
#include <sasa/synthdata.hpp>
