#pragma once

#include "drymask/audio.hpp"
#include "drymask/attention.hpp"
#include "drymask/common.hpp"
#include "drymask/conv.hpp"
#include "drymask/dataset.hpp"
#include "drymask/fft.hpp"
#include "drymask/grid.hpp"
#include "drymask/loss.hpp"
#include "drymask/mask.hpp"
#include "drymask/metrics.hpp"
#include "drymask/pipeline.hpp"
#include "drymask/postproc.hpp"
#include "drymask/rir.hpp"
#include "drymask/stft.hpp"
#include "drymask/tensor.hpp"
#include "drymask/trainer.hpp"
#include "drymask/unet.hpp"
#include "drymask/wav.hpp"
