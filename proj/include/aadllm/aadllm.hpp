#pragma once

#include "aadllm/backend.hpp"
#include "aadllm/baseline.hpp"
#include "aadllm/core_model.hpp"
#include "aadllm/csv_io.hpp"
#include "aadllm/detector.hpp"
#include "aadllm/digest.hpp"
#include "aadllm/error.hpp"
#include "aadllm/eval.hpp"
#include "aadllm/promptgen.hpp"
#include "aadllm/remote_backend.hpp"
#include "aadllm/run_io.hpp"
#include "aadllm/spc.hpp"
#include "aadllm/stats.hpp"
#include "aadllm/synthetic.hpp"
#include "aadllm/verdict.hpp"
