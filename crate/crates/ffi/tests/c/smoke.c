#include <stdio.h>
#include <string.h>
#include "kgalloc.h"

int main(void) {
    KgEngine *e = kg_engine_new_demo();
    if (!e) return 10;
    char *json = NULL;
    if (kg_engine_decide(e, "task-7", 1700005400, &json) != KG_STATUS_OK) return 11;
    if (!strstr(json, "\"chosen\":\"User_26\"")) return 12;
    kg_string_free(json);
    json = NULL;
    if (kg_engine_decide_human(e, "task-7", "User_55", 0, &json) != KG_STATUS_INELIGIBLE_SELECTION) return 13;
    if (!strstr(kg_engine_last_error(e), "separation of concerns")) return 14;
    if (kg_engine_add_triple(e, "\"x\" p q") != KG_STATUS_PARSE_ERROR) return 15;
    kg_engine_free(e);
    puts("ok");
    return 0;
}
