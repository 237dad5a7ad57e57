#pragma once

#include "foresee/checkpoint.hpp"
#include "foresee/dataset.hpp"
#include "foresee/errors.hpp"
#include "foresee/frames.hpp"
#include "foresee/grad_check.hpp"
#include "foresee/hash.hpp"
#include "foresee/kv.hpp"
#include "foresee/lstm.hpp"
#include "foresee/metrics.hpp"
#include "foresee/model.hpp"
#include "foresee/montage.hpp"
#include "foresee/online.hpp"
#include "foresee/optim.hpp"
#include "foresee/png.hpp"
#include "foresee/rng.hpp"
#include "foresee/synthetic.hpp"
#include "foresee/tensor.hpp"
#include "foresee/train.hpp"
#include "foresee/windows.hpp"
