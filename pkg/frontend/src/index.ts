export * from "./schema.js";
export * from "./editor.js";
export * from "./payload.js";
export * from "./playback.js";
