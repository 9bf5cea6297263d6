#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/adam.hpp>
#include <bsattack/numerics/gradients.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/embedding_table.hpp>
#include <bsattack/vocab/vocabulary.hpp>
#include <bsattack/model/checkpoint.hpp>
#include <bsattack/model/classifier.hpp>
#include <bsattack/model/linear.hpp>
#include <bsattack/model/parameters.hpp>
#include <bsattack/model/train.hpp>
#include <bsattack/model/transformer.hpp>
#include <bsattack/attack/attack.hpp>
#include <bsattack/attack/losses.hpp>
#include <bsattack/harness/config_file.hpp>
#include <bsattack/harness/dataset.hpp>
#include <bsattack/harness/evaluate.hpp>
#include <bsattack/harness/metrics.hpp>
#include <bsattack/harness/report.hpp>
#include <bsattack/harness/synthetic.hpp>
