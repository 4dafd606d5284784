/* Smoke test for the C API: generate a house, run an episode to the step
 * cap, and exercise the error paths a binding would hit first. */

#include <stdio.h>
#include <string.h>

#include "objnav.h"

static int fail(const char *what) {
    fprintf(stderr, "%s: %s\n", what, objnav_last_error());
    return 1;
}

int main(void) {
    if (strcmp(objnav_version(), "0.1.0") != 0) return fail("version");

    ObjnavEnvConfig cfg;
    if (objnav_env_config_default(&cfg) != OBJNAV_OK) return fail("config");
    uint32_t headings = 0;
    if (objnav_env_headings(&cfg, &headings) != OBJNAV_OK) return fail("headings");
    if (headings != 12) return fail("heading count");

    ObjnavHouse *house = NULL;
    if (objnav_house_generate(7, 15, 13, 1, 2, 1, 1, &house) != OBJNAV_OK) return fail("generate");

    char id[64];
    if (objnav_house_id(house, id, sizeof id) != OBJNAV_OK) return fail("id");
    if (objnav_house_id(house, id, 2) != OBJNAV_ERR_BUFFER) return fail("id buffer check");
    if (strlen(objnav_last_error()) == 0) return fail("error message missing");

    uint32_t w = 0, h = 0;
    if (objnav_house_dims(house, &w, &h) != OBJNAV_OK) return fail("dims");
    if (w != 15 || h != 13) return fail("dims mismatch");

    /* boundary cells are wall; scan inward for a free start cell */
    uint8_t blocked = 1;
    if (objnav_house_is_blocked(house, 0, 0, &blocked) != OBJNAV_OK || !blocked) return fail("boundary");
    double start_x = -1.0, start_y = -1.0;
    for (uint32_t iy = 1; iy + 1 < h && start_x < 0.0; iy++) {
        for (uint32_t ix = 1; ix + 1 < w; ix++) {
            if (objnav_house_is_blocked(house, (int64_t)ix, (int64_t)iy, &blocked) != OBJNAV_OK)
                return fail("is_blocked");
            if (!blocked) {
                double cell = objnav_cell_size();
                start_x = (ix + 0.5) * cell;
                start_y = (iy + 0.5) * cell;
                break;
            }
        }
    }
    if (start_x < 0.0) return fail("no free cell");

    cfg.max_steps = 40;
    cfg.seg_k = 9;
    ObjnavSim *sim = NULL;
    if (objnav_sim_new(house, &cfg, start_x, start_y, 0, 0, &sim) != OBJNAV_OK) return fail("sim_new");

    ObjnavStepResult res;
    if (objnav_sim_state(sim, &res) != OBJNAV_OK) return fail("state");
    if (res.x != start_x || res.y != start_y || res.heading != 0) return fail("start pose");
    if (!(res.geo_to_goal > 0.0)) return fail("geodesic at start");

    if (objnav_sim_step(sim, 1, &res) != OBJNAV_OK) return fail("turn");
    if (res.heading != 1) return fail("turn heading");

    size_t obs_len = 0;
    if (objnav_sim_obs_len(sim, &obs_len) != OBJNAV_OK) return fail("obs_len");
    if (obs_len != 9 * 9 * 7 + 6 + 4) return fail("obs_len value");
    double obs[9 * 9 * 7 + 6 + 4];
    uint32_t prev = 0, goal = 9;
    if (objnav_sim_observation(sim, obs, obs_len - 1, &prev, &goal) != OBJNAV_ERR_BUFFER)
        return fail("obs buffer check");
    if (objnav_sim_observation(sim, obs, obs_len, &prev, &goal) != OBJNAV_OK) return fail("observe");
    if (prev != 1 || goal != 0) return fail("categorical inputs");

    /* drive forward until the step cap ends the episode */
    int done = 0;
    for (uint32_t t = 0; t < cfg.max_steps && !done; t++) {
        if (objnav_sim_step(sim, 0, &res) != OBJNAV_OK) return fail("step");
        done = res.done;
    }
    if (!done) return fail("never done");
    if (res.success) return fail("timeout must not count as success");

    uint32_t steps = 0;
    double path_len = 0.0;
    if (objnav_sim_progress(sim, &steps, &path_len) != OBJNAV_OK) return fail("progress");
    if (steps != cfg.max_steps) return fail("step count");

    if (objnav_sim_step(sim, 9, &res) != OBJNAV_ERR_CONFIG) return fail("bad action accepted");
    if (objnav_sim_new(NULL, &cfg, 0.0, 0.0, 0, 0, &sim) != OBJNAV_ERR_NULL) return fail("null house accepted");

    objnav_sim_free(sim);
    objnav_house_free(house);
    printf("ok\n");
    return 0;
}
