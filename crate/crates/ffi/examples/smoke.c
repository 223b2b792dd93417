#include <stdio.h>
#include "gsa_dof.h"
int main(void) {
    GsaRational r;
    if (gsa_upper_bound(5, 10, 21, &r) != GSA_STATUS_OK) return 1;
    GsaScheme *s = NULL;
    if (gsa_scheme_synthesize(4, 3, 7, 2, 1, &s) != GSA_STATUS_OK) { printf("%s\n", gsa_last_error()); return 1; }
    bool ok = false; gsa_scheme_verify(s, &ok);
    gsa_scheme_free(s);
    printf("%lld/%lld %d\n", (long long)r.num, (long long)r.den, ok);
    return gsa_upper_bound(2,1,1,&r) == GSA_STATUS_INVALID_ARGUMENT ? 0 : 1;
}
