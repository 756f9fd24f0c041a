#pragma once

#include "cardsdp/bench.hpp"
#include "cardsdp/cardopt.hpp"
#include "cardsdp/errors.hpp"
#include "cardsdp/exact.hpp"
#include "cardsdp/instance.hpp"
#include "cardsdp/ipm.hpp"
#include "cardsdp/linalg.hpp"
#include "cardsdp/portfolio.hpp"
#include "cardsdp/qp.hpp"
#include "cardsdp/sdp.hpp"
