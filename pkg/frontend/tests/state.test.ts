import { beforeEach, describe, expect, it, vi } from "vitest";

import { StudioClient } from "../src/api.js";
import { StudioStore, type StoreOptions } from "../src/state.js";
import { MockService } from "./mockservice.js";

const BASE = "http://mock.test";
const TEXT_STEP = 'Add the text "GRAND OPENING" in large friendly letters';
const IMAGE_STEP = "Create a warm background of soft cream tones";

let mock: MockService;
let client: StudioClient;

beforeEach(() => {
    mock = new MockService();
    client = new StudioClient(BASE, mock.fetch);
});

async function openStore(options: StoreOptions = {}): Promise<StudioStore> {
    const store = new StudioStore(client, options);
    await store.create({ width: 96, height: 72 });
    return store;
}

async function addStep(store: StudioStore, instruction: string): Promise<void> {
    store.setDraft(instruction);
    expect(await store.submit()).toBe(true);
}

describe("StudioStore", () => {
    it("mirrors the fetched document after create and submit", async () => {
        const store = await openStore();
        expect(store.getState().sessionId).toBe("s0");
        expect(store.getState().width).toBe(96);
        expect(store.getState().steps).toEqual([]);

        await addStep(store, TEXT_STEP);
        const state = store.getState();
        expect(state.cursor).toBe(1);
        expect(state.steps).toHaveLength(1);
        expect(state.steps[0].instruction).toBe(TEXT_STEP);
        expect(state.steps[0].elements[0]).toMatchObject({
            kind: "text",
            content: "GRAND OPENING",
        });
        expect(state.draft).toBe("");
        expect(state.canvasVersion).toBe(1);
        expect(store.canUndo()).toBe(true);
    });

    it("validates an empty instruction inline without any network call", async () => {
        const store = await openStore();
        const before = mock.log.length;
        store.setDraft("   ");
        expect(await store.submit()).toBe(false);
        expect(store.getState().inlineError).toContain("instruction");
        expect(mock.log.length).toBe(before);
    });

    it("allows at most one in-flight step request", async () => {
        const store = await openStore();
        let release!: () => void;
        mock.stepGate = new Promise<void>((resolve) => {
            release = resolve;
        });
        store.setDraft(IMAGE_STEP);
        const first = store.submit();
        expect(store.getState().pending).toBe(true);
        expect(await store.submit()).toBe(false);
        release();
        expect(await first).toBe(true);
        const posts = mock.log.filter((line) => line.startsWith("POST /sessions/s0/steps"));
        expect(posts).toHaveLength(1);
    });

    it("keeps the timeline untouched and offers retry on a backend failure", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);

        mock.failNextStep = true;
        store.setDraft(TEXT_STEP);
        expect(await store.submit()).toBe(false);
        let state = store.getState();
        expect(state.banner).toMatchObject({ code: "backend_error", retryable: true });
        expect(state.steps).toHaveLength(1);
        expect(state.draft).toBe(TEXT_STEP);

        expect(await store.submit()).toBe(true);
        state = store.getState();
        expect(state.banner).toBeNull();
        expect(state.steps).toHaveLength(2);
    });

    it("branches at the scrub position after confirmation", async () => {
        const confirm = vi.fn(() => true);
        const store = await openStore({ confirmBranch: confirm });
        await addStep(store, IMAGE_STEP);
        await addStep(store, TEXT_STEP);
        await addStep(store, 'Add the text "SALE" in a corner');

        store.scrubTo(1);
        expect(store.viewStep()).toBe(1);
        store.setDraft("Replace everything after the backdrop");
        expect(await store.submit()).toBe(true);

        expect(confirm).toHaveBeenCalledTimes(1);
        const undos = mock.log.filter((line) => line === "POST /sessions/s0/undo");
        expect(undos).toHaveLength(2);
        const state = store.getState();
        expect(state.steps).toHaveLength(2);
        expect(state.steps[1].instruction).toBe("Replace everything after the backdrop");
        expect(state.cursor).toBe(2);
        expect(state.scrub).toBeNull();
    });

    it("aborts the branch when the confirmation is declined", async () => {
        const store = await openStore({ confirmBranch: () => false });
        await addStep(store, IMAGE_STEP);
        await addStep(store, TEXT_STEP);

        store.scrubTo(0);
        store.setDraft("Start over with a dark theme");
        const before = mock.log.length;
        expect(await store.submit()).toBe(false);
        expect(mock.log.length).toBe(before);
        expect(store.getState().steps).toHaveLength(2);
        expect(store.getState().draft).toBe("Start over with a dark theme");
    });

    it("asks for confirmation when a redo tail exists without scrubbing", async () => {
        const confirm = vi.fn(() => true);
        const store = await openStore({ confirmBranch: confirm });
        await addStep(store, IMAGE_STEP);
        await addStep(store, TEXT_STEP);
        await store.undoAction();
        expect(store.getState().cursor).toBe(1);

        store.setDraft("Take the design somewhere else");
        expect(await store.submit()).toBe(true);
        expect(confirm).toHaveBeenCalledTimes(1);
        expect(store.getState().steps).toHaveLength(2);
        expect(store.getState().steps[1].instruction).toBe("Take the design somewhere else");
    });

    it("patches the selected text element through the service", async () => {
        const store = await openStore();
        await addStep(store, TEXT_STEP);
        store.select(0, 0);

        expect(await store.applyPatch({ color: "#FF00FFFF" })).toBe(true);
        const element = store.getState().steps[0].elements[0];
        expect(element).toMatchObject({ kind: "text", color: "#FF00FFFF" });
        expect(store.getState().canvasVersion).toBe(2);
    });

    it("refuses to patch image elements without a network call", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);
        store.select(0, 0);
        const before = mock.log.length;
        expect(await store.applyPatch({ color: "#FF00FFFF" })).toBe(false);
        expect(store.getState().inlineError).toContain("text elements");
        expect(mock.log.length).toBe(before);
    });

    it("restores previous attributes when undoing a patch", async () => {
        const store = await openStore();
        await addStep(store, TEXT_STEP);
        const id = store.getState().sessionId!;
        const original = await client.fetchCanvas(id, 1);

        store.select(0, 0);
        await store.applyPatch({ color: "#FF00FFFF", content: "75% OFF" });
        const edited = await client.fetchCanvas(id, 1);
        expect(edited).not.toEqual(original);

        expect(await store.undoAction()).toBe(true);
        expect(store.getState().steps[0].elements[0]).toMatchObject({
            color: "#202020FF",
            content: "GRAND OPENING",
        });
        expect(await client.fetchCanvas(id, 1)).toEqual(original);

        expect(await store.redoAction()).toBe(true);
        expect(await client.fetchCanvas(id, 1)).toEqual(edited);
    });

    it("undoes and redoes steps through the service cursor", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);
        await addStep(store, TEXT_STEP);

        expect(await store.undoAction()).toBe(true);
        expect(store.getState().cursor).toBe(1);
        expect(mock.log).toContain("POST /sessions/s0/undo");

        expect(await store.redoAction()).toBe(true);
        expect(store.getState().cursor).toBe(2);
        expect(mock.log).toContain("POST /sessions/s0/redo");
    });

    it("falls back to server cursor undo when the page was reloaded", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);

        const reloaded = new StudioStore(client);
        await reloaded.open("s0");
        expect(reloaded.canUndo()).toBe(true);
        expect(await reloaded.undoAction()).toBe(true);
        expect(reloaded.getState().cursor).toBe(0);
        expect(reloaded.canUndo()).toBe(false);
        expect(reloaded.canRedo()).toBe(true);
    });

    it("clamps scrub positions and treats the cursor position as live", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);
        store.scrubTo(99);
        expect(store.getState().scrub).toBeNull();
        store.scrubTo(-3);
        expect(store.getState().scrub).toBe(0);
        store.scrubTo(1);
        expect(store.getState().scrub).toBeNull();
        expect(store.viewStep()).toBe(1);
    });

    it("builds canvas urls cache-busted by view step and version", async () => {
        const store = await openStore();
        await addStep(store, IMAGE_STEP);
        expect(store.canvasSrc()).toBe(`${BASE}/sessions/s0/canvas?step=1&v=1`);
        store.scrubTo(0);
        expect(store.canvasSrc()).toBe(`${BASE}/sessions/s0/canvas?step=0&v=1`);
        expect(store.previousCanvasSrc()).toBeNull();
        store.scrubLive();
        expect(store.previousCanvasSrc()).toBe(`${BASE}/sessions/s0/canvas?step=0&v=1`);
    });
});
