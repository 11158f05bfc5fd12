/* Declarations of the checker intrinsics so merged units compile standalone. */

void __VERIFIER_error(void);
void __VERIFIER_assume(int condition);
int __VERIFIER_nondet_int(void);
void *__VERIFIER_nondet_pointer(void);
int ldv_undef_int(void);
void *external_allocated_data(void);
void ldv_assume(int condition);
void ldv_assert(void);
