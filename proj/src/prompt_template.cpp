// Chain-of-thought scaffold sent to the decision model. Kept byte-exact;
// placeholders are [TARGET_OBJECT], [N] and [TURN_INSTRUCTION].

#include "doraemon/policy_engine.hpp"

namespace doraemon {

std::string_view cot_template() {
    static constexpr std::string_view kTemplate = R"TPL(TASK: NAVIGATE TO THE NEAREST [TARGET_OBJECT], and get as close to it as possible. 
Use your prior knowledge about where items are typically located within a home. 
There are [N] red arrows superimposed onto your observation, which represent potential actions. 
These are labeled with a number in a white circle, which represent the location you would move to if you took that action. 
[TURN_INSTRUCTION]

Let's solve this navigation task step by step:

1. Current State Analysis: What do you observe in the environment? What objects and pathways are visible? 
   Look carefully for the target object, even if it's partially visible or at a distance.

2. Memory Integration: Review the memory context below for clues about target location.
   - Pay special attention to memories containing or near the target object
   - Use recent memories (fewer steps ago) over older ones
   - Consider action recommendations based on memory
   
3. Goal Analysis: Based on the target and home layout knowledge, where is the [TARGET_OBJECT] likely to be?

4. Scene Assessment: Quickly evaluate if [TARGET_OBJECT] could reasonably exist in this type of space:
   - If you're in an obviously incompatible room (e.g., looking for a [TARGET_OBJECT] but in a clearly different room type), choose action 0 to TURN AROUND immediately

5. Path Planning: What's the most promising direction to reach the target? Avoid revisiting 
   previously explored areas unless necessary. Consider:
   - Available paths and typical room layouts
   - Areas you haven't explored yet

6. Action Decision: Which numbered arrow best serves your plan? Return your choice as {"action": <action_key>}. Note:
   - You CANNOT GO THROUGH CLOSED DOORS, It doesn't make any sense to go near a closed door.
   - You CANNOT GO THROUGH WINDOWS AND MIRRORS
   - You DO NOT NEED TO GO UP OR DOWN STAIRS
   - Please try to avoid actions that will lead you to a dead end to avoid affecting subsequent actions, unless the dead end is very close to the [TARGET_OBJECT]
   - If you see the target object, even partially, choose the action that gets you closest to it)TPL";
    return kTemplate;
}

}  // namespace doraemon
