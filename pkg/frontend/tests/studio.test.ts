import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { StudioClient } from "../src/api.js";
import { createStudio, type Studio } from "../src/app.js";
import type { ConfirmBranch } from "../src/state.js";
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

afterEach(() => {
    document.body.innerHTML = "";
});

function q<T extends HTMLElement>(root: HTMLElement, testid: string): T {
    const node = root.querySelector(`[data-testid="${testid}"]`);
    if (node === null) {
        throw new Error(`missing studio node: ${testid}`);
    }
    return node as T;
}

function setInput(input: HTMLInputElement, value: string): void {
    input.value = value;
    input.dispatchEvent(new Event("input", { bubbles: true }));
}

function generate(root: HTMLElement): void {
    q<HTMLFormElement>(root, "composer").dispatchEvent(
        new Event("submit", { bubbles: true, cancelable: true }),
    );
}

function timelineLabels(root: HTMLElement): string[] {
    const timeline = q<HTMLElement>(root, "timeline");
    return Array.from(timeline.querySelectorAll("button"), (b) => b.textContent ?? "");
}

async function mount(confirmBranch?: ConfirmBranch): Promise<{ studio: Studio; root: HTMLElement }> {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const studio = await createStudio(root, client, {
        create: { width: 96, height: 72 },
        confirmBranch,
    });
    return { studio, root };
}

describe("studio loop", () => {
    it("generate, recolor, undo, and reload reproduce the same views", async () => {
        const { studio, root } = await mount();
        const id = studio.store.getState().sessionId!;

        setInput(q(root, "instruction"), TEXT_STEP);
        generate(root);
        await studio.store.whenIdle();

        const labels = timelineLabels(root);
        expect(labels).toHaveLength(2);
        expect(labels[0]).toBe("blank canvas");
        expect(labels[1]).toContain('0: Add the text "GRAND OPENING"');
        const canvas = q<HTMLImageElement>(root, "canvas");
        const srcAfterStep = canvas.getAttribute("src")!;
        expect(srcAfterStep).toContain("step=1");
        const original = await client.fetchCanvas(id, 1);

        q(root, "element-0-0").click();
        expect(q<HTMLInputElement>(root, "edit-content").value).toBe("GRAND OPENING");
        expect(q<HTMLInputElement>(root, "edit-color").value).toBe("#202020FF");

        q(root, "swatch-2").click();
        await studio.store.whenIdle();
        expect(q<HTMLInputElement>(root, "edit-color").value).toBe("#C62828FF");
        const srcAfterPatch = canvas.getAttribute("src")!;
        expect(srcAfterPatch).not.toBe(srcAfterStep);
        const recolored = await client.fetchCanvas(id, 1);
        expect(recolored).not.toEqual(original);

        q(root, "undo").click();
        await studio.store.whenIdle();
        expect(await client.fetchCanvas(id, 1)).toEqual(original);
        expect(q<HTMLInputElement>(root, "edit-color").value).toBe("#202020FF");
        expect(canvas.getAttribute("src")).not.toBe(srcAfterPatch);

        const reloadRoot = document.createElement("div");
        document.body.appendChild(reloadRoot);
        const reloaded = await createStudio(reloadRoot, client, { sessionId: id });
        await reloaded.store.whenIdle();
        expect(timelineLabels(reloadRoot)).toEqual(timelineLabels(root));
        expect(reloaded.store.getState().cursor).toBe(studio.store.getState().cursor);
        expect(reloaded.store.viewStep()).toBe(studio.store.viewStep());
        expect(await client.fetchCanvas(id, reloaded.store.viewStep())).toEqual(
            await client.fetchCanvas(id, studio.store.viewStep()),
        );
    });

    it("shows inline validation for an empty instruction without a request", async () => {
        const { studio, root } = await mount();
        const before = mock.log.length;
        generate(root);
        await studio.store.whenIdle();
        const inline = q<HTMLElement>(root, "inline-error");
        expect(inline.hidden).toBe(false);
        expect(inline.textContent).toContain("instruction");
        expect(mock.log.length).toBe(before);

        setInput(q(root, "instruction"), "A");
        expect(q<HTMLElement>(root, "inline-error").hidden).toBe(true);
    });

    it("disables the composer while a step is in flight", async () => {
        const { studio, root } = await mount();
        let release!: () => void;
        mock.stepGate = new Promise<void>((resolve) => {
            release = resolve;
        });
        setInput(q(root, "instruction"), IMAGE_STEP);
        generate(root);
        expect(q<HTMLButtonElement>(root, "generate").disabled).toBe(true);
        expect(q<HTMLInputElement>(root, "instruction").disabled).toBe(true);
        release();
        await studio.store.whenIdle();
        expect(q<HTMLButtonElement>(root, "generate").disabled).toBe(false);
        expect(timelineLabels(root)).toHaveLength(2);
    });

    it("shows the structured error banner and recovers via retry", async () => {
        const { studio, root } = await mount();
        mock.failNextStep = true;
        setInput(q(root, "instruction"), IMAGE_STEP);
        generate(root);
        await studio.store.whenIdle();

        const banner = q<HTMLElement>(root, "banner");
        expect(banner.hidden).toBe(false);
        expect(q<HTMLElement>(root, "banner-message").textContent).toContain("backend_error");
        expect(timelineLabels(root)).toEqual(["blank canvas"]);

        q(root, "retry").click();
        await studio.store.whenIdle();
        expect(q<HTMLElement>(root, "banner").hidden).toBe(true);
        expect(timelineLabels(root)).toHaveLength(2);
    });

    it("scrubs the timeline and confirms before branching", async () => {
        const confirm = vi.fn<[], boolean>().mockReturnValueOnce(false).mockReturnValue(true);
        const { studio, root } = await mount(confirm);
        setInput(q(root, "instruction"), IMAGE_STEP);
        generate(root);
        await studio.store.whenIdle();
        setInput(q(root, "instruction"), TEXT_STEP);
        generate(root);
        await studio.store.whenIdle();

        q(root, "timeline-0").click();
        const canvas = q<HTMLImageElement>(root, "canvas");
        expect(canvas.getAttribute("src")).toContain("step=0");
        expect(q<HTMLElement>(root, "view-label").textContent).toContain("(scrubbed)");

        setInput(q(root, "instruction"), "Start over with a dark theme");
        generate(root);
        await studio.store.whenIdle();
        expect(confirm).toHaveBeenCalledTimes(1);
        expect(timelineLabels(root)).toHaveLength(3);

        generate(root);
        await studio.store.whenIdle();
        expect(confirm).toHaveBeenCalledTimes(2);
        expect(timelineLabels(root)).toEqual([
            "blank canvas",
            "0: Start over with a dark theme",
        ]);
        expect(canvas.getAttribute("src")).toContain("step=1");
    });

    it("scrubbing to the head matches the live view", async () => {
        const { studio, root } = await mount();
        setInput(q(root, "instruction"), IMAGE_STEP);
        generate(root);
        await studio.store.whenIdle();

        const canvas = q<HTMLImageElement>(root, "canvas");
        const live = canvas.getAttribute("src");
        q(root, "timeline-0").click();
        expect(canvas.getAttribute("src")).toContain("step=0");
        q(root, "timeline-1").click();
        expect(canvas.getAttribute("src")).toBe(live);
        expect(q<HTMLElement>(root, "view-label").textContent).not.toContain("scrubbed");
    });

    it("disables image element rows and the editor for them", async () => {
        const { studio, root } = await mount();
        setInput(q(root, "instruction"), IMAGE_STEP);
        generate(root);
        await studio.store.whenIdle();

        const row = q<HTMLButtonElement>(root, "element-0-0");
        expect(row.disabled).toBe(true);
        row.click();
        expect(studio.store.getState().selected).toBeNull();
        expect(q<HTMLElement>(root, "editor").textContent).toContain("select a text element");
    });

    it("applies form edits to content and font size", async () => {
        const { studio, root } = await mount();
        setInput(q(root, "instruction"), TEXT_STEP);
        generate(root);
        await studio.store.whenIdle();
        q(root, "element-0-0").click();

        setInput(q(root, "edit-content"), "75% OFF");
        setInput(q(root, "edit-size"), "48");
        q(root, "apply").click();
        await studio.store.whenIdle();

        expect(studio.store.getState().steps[0].elements[0]).toMatchObject({
            content: "75% OFF",
            font_size: 48,
        });
        expect(q<HTMLElement>(root, "elements").textContent).toContain("75% OFF");
    });

    it("attaches a dropped asset and sends it multipart", async () => {
        const { studio, root } = await mount();
        const file = new File([new Uint8Array([9, 9, 9])], "photo.png", { type: "image/png" });
        const drop = new Event("drop", { bubbles: true, cancelable: true });
        Object.assign(drop, { dataTransfer: { files: [file] } });
        q(root, "dropzone").dispatchEvent(drop);

        const chip = q<HTMLElement>(root, "asset-chip");
        expect(chip.hidden).toBe(false);
        expect(chip.textContent).toContain("photo.png");

        setInput(q(root, "instruction"), "Insert the attached photo of the shopfront");
        generate(root);
        await studio.store.whenIdle();

        const id = studio.store.getState().sessionId!;
        expect(mock.session(id).steps[0].asset_ref).toBe("sha256:photo.png:3");
        expect(q<HTMLElement>(root, "asset-chip").hidden).toBe(true);
    });

    it("overlays the previous state for a visual diff", async () => {
        const { studio, root } = await mount();
        setInput(q(root, "instruction"), TEXT_STEP);
        generate(root);
        await studio.store.whenIdle();

        const overlay = q<HTMLImageElement>(root, "diff-overlay");
        expect(overlay.hidden).toBe(true);
        const toggle = q<HTMLInputElement>(root, "diff-toggle");
        toggle.checked = true;
        toggle.dispatchEvent(new Event("change", { bubbles: true }));
        expect(overlay.hidden).toBe(false);
        expect(overlay.getAttribute("src")).toContain("step=0");

        studio.store.scrubTo(0);
        expect(q<HTMLImageElement>(root, "diff-overlay").hidden).toBe(true);
    });
});
