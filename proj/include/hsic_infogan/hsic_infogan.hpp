#pragma once

#include "hsic_infogan/adam.hpp"
#include "hsic_infogan/autodiff.hpp"
#include "hsic_infogan/checkpoint.hpp"
#include "hsic_infogan/dataio.hpp"
#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/evaluation.hpp"
#include "hsic_infogan/grad_check.hpp"
#include "hsic_infogan/kernel_hsic.hpp"
#include "hsic_infogan/latent.hpp"
#include "hsic_infogan/networks.hpp"
#include "hsic_infogan/rng.hpp"
#include "hsic_infogan/sweep.hpp"
#include "hsic_infogan/tensor.hpp"
#include "hsic_infogan/training.hpp"
