#pragma once

#define REFPRIOR_VERSION "0.1.0"
