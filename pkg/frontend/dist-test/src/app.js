// Headless application core: all queue/selection/decision state and the
// server round-trips live here, so the behavior is testable without a
// browser. main.ts only binds this to the DOM.
import { ApiRequestError } from "./api.js";
import { DEFAULT_PROFILES } from "./types.js";
export function emptyForm() {
    return { decision: "approve", criterion: "", note: "" };
}
/** Pure form validation; an error here means no request may be sent. */
export function validateDecision(form, profileId) {
    if (!profileId)
        return "select a reviewer profile first";
    if (form.decision === "reject" && !form.criterion)
        return "rejection requires a checklist criterion";
    return null;
}
export class ReviewApp {
    api;
    state;
    onChange = () => { };
    constructor(api, profiles = DEFAULT_PROFILES) {
        this.api = api;
        this.state = {
            profiles,
            profileId: profiles[0]?.id ?? "",
            tierFilter: 1,
            statusFilter: "pending",
            page: 1,
            pageSize: 20,
            queue: null,
            selected: null,
            form: emptyForm(),
            fieldError: null,
            banner: null,
            stats: null,
        };
    }
    emit() {
        this.onChange(this.state);
    }
    get activeProfile() {
        return this.state.profiles.find((p) => p.id === this.state.profileId);
    }
    setProfile(profileId) {
        this.state.profileId = profileId;
        const profile = this.activeProfile;
        if (profile)
            this.state.tierFilter = profile.tier;
        this.emit();
    }
    setFilters(tier, status) {
        this.state.tierFilter = tier;
        this.state.statusFilter = status;
        this.state.page = 1;
        this.emit();
    }
    setPage(page) {
        this.state.page = Math.max(1, page);
        this.emit();
    }
    setForm(patch) {
        this.state.form = { ...this.state.form, ...patch };
        this.state.fieldError = null;
        this.emit();
    }
    dismissBanner() {
        this.state.banner = null;
        this.emit();
    }
    async loadQueue() {
        const queue = await this.api.listItems({
            tier: this.state.tierFilter ?? undefined,
            status: this.state.statusFilter || undefined,
            page: this.state.page,
            pageSize: this.state.pageSize,
        });
        this.state.queue = queue;
        this.emit();
        return queue;
    }
    async loadStats() {
        const stats = await this.api.getStats();
        this.state.stats = stats;
        this.emit();
        return stats;
    }
    async select(itemId) {
        const detail = await this.api.getItem(itemId);
        this.state.selected = detail;
        this.state.form = emptyForm();
        this.state.fieldError = null;
        this.state.banner = null;
        this.emit();
        return detail;
    }
    /** Re-GET the selected item so local state is exactly the server's. */
    async refreshSelected() {
        if (!this.state.selected)
            return null;
        const detail = await this.api.getItem(this.state.selected.item.id);
        this.state.selected = detail;
        this.emit();
        return detail;
    }
    get checklist() {
        return this.state.selected?.checklist ?? [];
    }
    /**
     * Submit the decision form for the selected item.
     *
     * Validation failures never reach the network. A 409 reloads the item and
     * surfaces a conflict banner while preserving the typed note. Returns the
     * fresh server item on success, null otherwise.
     */
    async submit() {
        const selected = this.state.selected;
        if (!selected) {
            this.state.fieldError = "select an item first";
            this.emit();
            return null;
        }
        const error = validateDecision(this.state.form, this.state.profileId);
        if (error) {
            this.state.fieldError = error;
            this.emit();
            return null;
        }
        const profile = this.activeProfile;
        if (!profile) {
            this.state.fieldError = "select a reviewer profile first";
            this.emit();
            return null;
        }
        const body = {
            tier: profile.tier,
            reviewer_id: profile.id,
            decision: this.state.form.decision,
            expected_version: selected.item.review.version,
            ...(this.state.form.criterion ? { criterion: this.state.form.criterion } : {}),
            note: this.state.form.note,
        };
        try {
            await this.api.submitReview(selected.item.id, body);
        }
        catch (err) {
            if (err instanceof ApiRequestError && err.isVersionConflict) {
                const keptNote = this.state.form.note;
                await this.refreshSelected();
                this.state.form = { ...this.state.form, note: keptNote };
                this.state.banner = {
                    kind: "conflict",
                    text: `the item changed under you (${err.code}); showing the fresh version, your note is preserved`,
                    retriable: false,
                };
                this.emit();
                return null;
            }
            const text = err instanceof Error ? err.message : String(err);
            this.state.banner = { kind: "error", text: `request failed: ${text}`, retriable: true };
            this.emit();
            return null;
        }
        // acknowledged: trust nothing local, re-GET item and queue
        const detail = await this.refreshSelected();
        await this.loadQueue();
        this.state.form = emptyForm();
        this.state.banner = { kind: "info", text: "decision recorded", retriable: false };
        this.emit();
        return detail?.item ?? null;
    }
}
