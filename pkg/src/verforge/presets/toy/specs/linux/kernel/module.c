/* Module reference counting reduced to error-function reachability. */

struct module;

/* NOTE Initialize module reference counter at the beginning */
static int ldv_module_refcounter = 0;

void ldv_module_get(struct module *module)
{
    if (module)
        /* NOTE Increment module reference counter */
        ldv_module_refcounter++;
}

int ldv_try_module_get(struct module *module)
{
    if (module && ldv_undef_int()) {
        /* NOTE Increment module reference counter */
        ldv_module_refcounter++;
        /* NOTE Successfully increment module reference counter */
        return 1;
    }

    /* NOTE Could not increment module reference counter */
    return 0;
}

void ldv_module_put(struct module *module)
{
    if (module) {
        if (ldv_module_refcounter == 0)
            /* ASSERT Decremented module reference counter should be greater than its initial state */
            ldv_assert();
        /* NOTE Decrement module reference counter */
        ldv_module_refcounter--;
    }
}

void ldv_check_final_state(void)
{
    if (ldv_module_refcounter != 0)
        /* ASSERT Module reference counter should be decremented to its initial value before finishing operation */
        ldv_assert();
}
