#pragma once

#include "xqmft/forest.hpp"
#include "xqmft/xml.hpp"
#include "xqmft/mft.hpp"
#include "xqmft/evaluate.hpp"
#include "xqmft/rule_format.hpp"
#include "xqmft/query.hpp"
#include "xqmft/path_dfa.hpp"
#include "xqmft/compiler.hpp"
#include "xqmft/optimizer.hpp"
#include "xqmft/composer.hpp"
#include "xqmft/stream.hpp"
#include "xqmft/bench.hpp"
