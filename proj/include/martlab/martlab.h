/* mart-lab C API: exact martingale verification over countable probability
 * spaces, behind opaque handles. All composite inputs and outputs are JSON
 * strings (schema "mart-lab/1"); exact numbers travel as "p/q" strings with
 * decimal approximations alongside.
 *
 * Every function returns ML_OK on success; on failure ml_last_error() holds
 * a thread-local message. Strings returned through char** are owned by the
 * caller and must be released with ml_string_free().
 */

#ifndef MARTLAB_H
#define MARTLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ml_lab ml_lab; /* opaque experiment handle */

typedef enum ml_status {
  ML_OK = 0,
  ML_ERR_INVALID_ARGUMENT = 1,
  ML_ERR_PARSE = 2,
  ML_ERR_INDETERMINATE_TAIL = 3,
  ML_ERR_ZERO_MASS_BLOCK = 4,
  ML_ERR_NOT_TERMINATING = 5,
  ML_ERR_MISSING_UNIFORM = 6,
  ML_ERR_PRECONDITION_FAILED = 7,
  ML_ERR_NOT_APPLICABLE = 8,
  ML_ERR_INTERNAL = 9
} ml_status;

const char* ml_version(void);
const char* ml_last_error(void);
void ml_string_free(char* s);

/* name: cherny | cherny_randomized | random_walk | two_atom_nonadapted |
 * nonnegative_control. params_json (optional, may be NULL):
 * {"depth":50,"levels":1000,"eta":"0","horizon":1000} */
ml_status ml_lab_open_example(const char* name, const char* params_json, ml_lab** out);

/* process spec file: explicit finite space with paths, or a generative
 * kernel declaration */
ml_status ml_lab_open_file(const char* path, ml_lab** out);

void ml_lab_close(ml_lab* lab);

/* atoms, exact weights and residual of the depth-d enumeration prefix */
ml_status ml_lab_enumerate(ml_lab* lab, int depth, char** json_out);

/* rv_json: {"kind":"value_at","t":"5"} | {"kind":"abs_value_at","t":"5"}
 *        | {"kind":"trunc_abs_at","t":"5","K":"10"} | {"kind":"abs_limit"}
 *        | {"kind":"stopped","spec":{...},"absolute":false}
 * policy_json (optional): {"max_depth":10000,"threshold":"1000",
 *                          "stop_at_threshold":false}
 * Result kinds: exact | truncated | divergence_certificate.
 * ML_ERR_INDETERMINATE_TAIL when the query is not decidable under the
 * policy. */
ml_status ml_lab_expectation(ml_lab* lab, const char* rv_json, const char* policy_json,
                             char** json_out);

/* runs the full statement suite (I)-(V); the report carries per-statement
 * verdicts with witnesses, the expected table for named examples, and the
 * hierarchy-consistency flag. params_json (optional):
 * {"grid_max":"50","max_specs":2000,"levels":["1/2","1","4","9"]} */
ml_status ml_lab_run_suite(ml_lab* lab, const char* params_json, char** json_out);

/* grid_json (optional): ["0","1/2","1",...]; defaults to integers and
 * midpoints up to 50 */
ml_status ml_lab_adaptedness(ml_lab* lab, const char* spec_json, const char* grid_json,
                             int depth, char** json_out);

ml_status ml_lab_finiteness(ml_lab* lab, const char* spec_json, int depth, char** json_out);

/* excursion-gap construction: sigma_1 / sigma_2 / tau built from epsilon
 * ("p/q"); ML_ERR_PRECONDITION_FAILED when no epsilon-excursion exists,
 * ML_ERR_NOT_APPLICABLE when liminf |M| != 0. */
ml_status ml_lab_witness_gap(ml_lab* lab, const char* epsilon, long horizon, char** json_out);

/* exact E[|X_{1/U}|] per level count in m_list, with the fitted slope
 * against ln m */
ml_status ml_lab_blowup_curve(ml_lab* lab, const long* m_list, size_t m_count, char** json_out);

/* query_json:
 *   {"kind":"expectation","rv":{...},"depth":100,"n":100000,"seed":1}
 * | {"kind":"stopped","spec":{...},"horizon":1000,"n":100000,"seed":1}
 * | {"kind":"reciprocal_u_abs","u_floor":1e-4,"n":100000,"seed":1} */
ml_status ml_lab_mc(ml_lab* lab, const char* query_json, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* MARTLAB_H */
