// Wire types mirroring the review API payloads.
export const DEFAULT_PROFILES = [
    { id: "dr-attending", tier: 1, label: "Attending (tier 1)" },
    { id: "dr-associate", tier: 2, label: "Associate expert (tier 2)" },
    { id: "dr-chief", tier: 3, label: "Chief physician (tier 3)" },
];
export const NONE_OF_THE_ABOVE = "None of the above";
