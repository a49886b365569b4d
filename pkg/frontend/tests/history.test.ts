import { describe, expect, it } from "vitest";

import { ActionHistory, type Action } from "../src/history.js";

const STEP: Action = { kind: "step" };

function patch(step: number): Action {
    return {
        kind: "patch",
        step,
        element: 0,
        before: { color: "#000000FF" },
        after: { color: "#FF0000FF" },
    };
}

describe("ActionHistory", () => {
    it("starts empty", () => {
        const history = new ActionHistory();
        expect(history.canUndo).toBe(false);
        expect(history.canRedo).toBe(false);
        expect(history.undo()).toBeNull();
        expect(history.redo()).toBeNull();
    });

    it("undoes in reverse push order and redoes forward", () => {
        const history = new ActionHistory();
        const a = patch(0);
        history.push(STEP);
        history.push(a);
        expect(history.undo()).toBe(a);
        expect(history.undo()).toBe(STEP);
        expect(history.canUndo).toBe(false);
        expect(history.redo()).toBe(STEP);
        expect(history.redo()).toBe(a);
        expect(history.canRedo).toBe(false);
    });

    it("clears the redo stack on a new push", () => {
        const history = new ActionHistory();
        history.push(STEP);
        history.push(patch(0));
        history.undo();
        expect(history.canRedo).toBe(true);
        history.push(patch(1));
        expect(history.canRedo).toBe(false);
        expect(history.redo()).toBeNull();
    });

    it("clear drops both stacks", () => {
        const history = new ActionHistory();
        history.push(STEP);
        history.undo();
        history.clear();
        expect(history.canUndo).toBe(false);
        expect(history.canRedo).toBe(false);
    });
});
