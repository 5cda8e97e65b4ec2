#ifndef ACC_TESTSUITE_H
#define ACC_TESTSUITE_H

#include <stdio.h>
#include <stdlib.h>
#include <math.h>

#ifdef _OPENACC
#include <openacc.h>
#endif

/* Number of times each test function is called by main. */
#ifndef NUM_TEST_CALLS
#define NUM_TEST_CALLS 10
#endif

/* Seed for tests that fill arrays with pseudo-random data. */
#ifndef SEED
#define SEED 1234
#endif

#endif /* ACC_TESTSUITE_H */
