#pragma once

// Umbrella header for the adaptive sparse variational inference library.

#include "asvi/data_io.hpp"
#include "asvi/dataset.hpp"
#include "asvi/elbo.hpp"
#include "asvi/metrics.hpp"
#include "asvi/network.hpp"
#include "asvi/optimizer.hpp"
#include "asvi/rates.hpp"
#include "asvi/rng.hpp"
#include "asvi/select.hpp"
#include "asvi/serialize.hpp"
#include "asvi/teacher.hpp"
#include "asvi/train.hpp"
#include "asvi/variational.hpp"
